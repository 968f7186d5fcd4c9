//! Cross-module invariants checked on generated inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use chrono::NaiveDate;
use proptest::prelude::*;

use stag_core::authors::{bundled_author_model, disambiguate_authors, Author, MentionRef};
use stag_core::citelink::{build_citation_graph, build_paper_index, LinkConfig};
use stag_core::dedup::{dedupe_corpus, pair_features, Paper, PairScoreModel, DEFAULT_THRESHOLD};
use stag_core::enrich::{classify_fos, train_fos, FieldLabel, FosConfig, FosModel};
use stag_core::graphstore::{build_graph, Graph, GraphParts, SearchFilters};
use stag_core::ingest::{load_corpus, parse_record, PaperMention};
use stag_core::kbnorm::{build_venue_kb, iso4_abbreviate, normalize_venue, read_jsonl, AbbrevTable, VenueRecord};
use stag_core::pipeline::{train_or_load_dedup_model, DedupSettings};
use stag_core::recommend::{coi_score, match_score, RecentIndex, Recommender};
use stag_core::synth;
use stag_core::text::{embed_document, name_compatibility, NameCompat, PersonName, DEFAULT_EMBEDDING_DIM};

fn demo_dir() -> &'static Path {
    static DIR: OnceLock<std::path::PathBuf> = OnceLock::new();
    DIR.get_or_init(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo"))
}

/// Demo mentions, a pair model trained on them, and the deduplicated papers.
fn demo() -> &'static (Vec<PaperMention>, PairScoreModel, Vec<Paper>) {
    static DEMO: OnceLock<(Vec<PaperMention>, PairScoreModel, Vec<Paper>)> = OnceLock::new();
    DEMO.get_or_init(|| {
        let mentions = load_corpus(&demo_dir().join("corpus")).unwrap().mentions;
        let (model, _) = train_or_load_dedup_model(&mentions, &DedupSettings::default(), 7301).unwrap();
        let papers = dedupe_corpus(&mentions, &model, DEFAULT_THRESHOLD).papers;
        (mentions, model, papers)
    })
}

fn fos_model() -> &'static FosModel {
    static MODEL: OnceLock<FosModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let c = synth::fos_corpus(31, 2, 20, 0.0);
        train_fos(&c.venue_labels, &c.train, &FosConfig::default()).unwrap().0
    })
}

#[derive(Debug, Clone)]
enum Line {
    Valid(u8),
    Malformed,
    Untitled,
}

fn line_strategy() -> impl Strategy<Value = Line> {
    prop_oneof![
        4 => (0u8..12).prop_map(Line::Valid),
        1 => Just(Line::Malformed),
        1 => Just(Line::Untitled),
    ]
}

fn render(line: &Line, i: usize) -> String {
    match line {
        // Small id range so duplicates occur.
        Line::Valid(id) => format!(r#"{{"id": "r{id}", "title": "Record number {i}", "date": 2020}}"#),
        Line::Malformed => "{\"id\": ".to_owned(),
        Line::Untitled => format!(r#"{{"id": "u{i}", "title": ""}}"#),
    }
}

fn graph_with_reviewer(papers: &[(String, String)], extra_author: bool) -> Graph {
    let mut parts = GraphParts::default();
    let mut mentions: BTreeMap<u64, Vec<MentionRef>> = BTreeMap::new();
    for (i, (title, abs)) in papers.iter().enumerate() {
        let id = i as u64 + 1;
        let mut names = vec!["Rita Reviewer".to_owned()];
        if extra_author {
            names.push("Otto Other".to_owned());
        }
        let mut p = synth::bare_paper(id, title, abs, &names, NaiveDate::from_ymd_opt(2020, 1, 1));
        p.embedding = Some(embed_document(title, abs, DEFAULT_EMBEDDING_DIM));
        for pos in 0..names.len() {
            mentions.entry(pos as u64 + 1).or_default().push((id, pos as u32));
        }
        parts.papers.push(p);
    }
    for (id, name) in [(1u64, "Rita Reviewer"), (2, "Otto Other")] {
        parts.authors.push(Author {
            author_id: id,
            canonical_name: name.into(),
            mentions: mentions.remove(&id).unwrap_or_default(),
            affiliations: BTreeSet::new(),
        });
    }
    build_graph(parts).unwrap()
}

fn text_strategy() -> impl Strategy<Value = (String, String)> {
    (
        prop::collection::vec(prop::sample::select(synth::field_words(FieldLabel::ComputerScience)), 3..8),
        prop::collection::vec(prop::sample::select(synth::field_words(FieldLabel::Physics)), 0..12),
    )
        .prop_map(|(t, a)| (t.join(" "), a.join(" ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ingest_counts_add_up(lines in prop::collection::vec(line_strategy(), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let text: Vec<String> = lines.iter().enumerate().map(|(i, l)| render(l, i)).collect();
        std::fs::write(dir.path().join("crossref.jsonl"), text.join("\n")).unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        let r = corpus.report;
        prop_assert_eq!(r.read, lines.len());
        prop_assert_eq!(r.accepted + r.rejected, r.read);
        prop_assert_eq!(r.accepted, corpus.mentions.len());
        let ids: HashSet<&str> = corpus.mentions.iter().map(|m| m.mention_id.as_str()).collect();
        prop_assert_eq!(ids.len(), corpus.mentions.len());
        for line in &text {
            if let Ok(first) = parse_record(line, "crossref") {
                prop_assert_eq!(Some(first), parse_record(line, "crossref").ok());
            }
        }
    }

    #[test]
    fn pair_features_are_symmetric(i in 0usize..400, j in 0usize..400) {
        let mentions = &demo().0;
        let (a, b) = (&mentions[i % mentions.len()], &mentions[j % mentions.len()]);
        prop_assert_eq!(pair_features(a, b), pair_features(b, a));
    }

    #[test]
    fn dedup_partitions_any_subset(mask in prop::collection::vec(any::<bool>(), 400)) {
        let (mentions, model, _) = demo();
        let subset: Vec<PaperMention> =
            mentions.iter().zip(mask.iter().cycle()).filter(|(_, keep)| **keep).map(|(m, _)| m.clone()).collect();
        let out = dedupe_corpus(&subset, model, DEFAULT_THRESHOLD);
        let mut seen: Vec<&str> = out.papers.iter().flat_map(|p| p.member_mentions.iter().map(String::as_str)).collect();
        seen.sort_unstable();
        let mut want: Vec<&str> = subset.iter().map(|m| m.mention_id.as_str()).collect();
        want.sort_unstable();
        prop_assert_eq!(seen, want);
        prop_assert_eq!(out.mention_to_corpus.len(), subset.len());
        let again = dedupe_corpus(&subset, model, DEFAULT_THRESHOLD);
        prop_assert_eq!(out.mention_to_corpus, again.mention_to_corpus);
    }

    #[test]
    fn citation_edges_are_well_formed(mask in prop::collection::vec(any::<bool>(), 200)) {
        let papers: Vec<Paper> =
            demo().2.iter().zip(mask.iter().cycle()).filter(|(_, keep)| **keep).map(|(p, _)| p.clone()).collect();
        let index = build_paper_index(&papers);
        let edges = build_citation_graph(&papers, &index, &LinkConfig::default());
        let by_id: HashMap<u64, &Paper> = papers.iter().map(|p| (p.corpus_id, p)).collect();
        let mut pairs = HashSet::new();
        for e in &edges {
            prop_assert_ne!(e.citing, e.cited);
            prop_assert!(by_id.contains_key(&e.cited));
            prop_assert!(pairs.insert((e.citing, e.cited)), "duplicate edge");
            let sentences: HashSet<&str> = by_id[&e.citing]
                .references
                .iter()
                .flat_map(|r| r.body_sentences.iter().map(|s| s.text.as_str()))
                .collect();
            for c in &e.contexts {
                prop_assert!(sentences.contains(c.text.as_str()), "context {:?} not in citing paper", c.text);
            }
        }
        prop_assert_eq!(&edges, &build_citation_graph(&papers, &index, &LinkConfig::default()));
    }

    #[test]
    fn iso4_is_idempotent(words in prop::collection::vec(
        prop_oneof!["[A-Z][a-z]{2,9}", prop::sample::select(vec![
            "Journal", "International", "Review", "Physics", "Medicine", "Research", "Letters",
            "of", "and", "the", "Biology", "Computer", "Science", "Annals", "Proceedings",
        ]).prop_map(str::to_owned)],
        1..7,
    )) {
        let table = AbbrevTable::bundled();
        let once = iso4_abbreviate(&words.join(" "), &table);
        prop_assert_eq!(iso4_abbreviate(&once, &table), once.clone());
    }

    #[test]
    fn unrelated_venue_only_changes_colliding_keys(name in "[A-Z][a-z]{3,8} [A-Z][a-z]{3,8} Quarterly") {
        let table = AbbrevTable::bundled();
        let venues: Vec<VenueRecord> = read_jsonl(&demo_dir().join("venues.jsonl")).unwrap();
        let before = build_venue_kb(&venues, &table);
        let mut more = venues.clone();
        more.push(VenueRecord {
            venue_id: "VNEW".into(),
            canonical_name: name.clone(),
            variants: BTreeSet::new(),
            issn: None,
        });
        let after = build_venue_kb(&more, &table);
        let new_keys = build_venue_kb(&more[more.len() - 1..], &table);
        for v in &venues {
            for s in v.variants.iter().chain([&v.canonical_name]) {
                let was = normalize_venue(s, &before);
                let now = normalize_venue(s, &after);
                let collides = normalize_venue(s, &new_keys).is_some();
                prop_assert!(was == now || (collides && now.is_none()), "{s}: {was:?} -> {now:?}");
            }
        }
    }

    #[test]
    fn authors_partition_mentions(seed in 0u64..1000) {
        let corpus = synth::author_corpus(seed, 20, 40, 0.3);
        let model = bundled_author_model();
        let out = disambiguate_authors(&corpus.papers, &corpus.inst_links, &model, 0.75);
        let slots: usize = corpus.papers.iter().map(|p| p.authors.len()).sum();
        prop_assert_eq!(out.mention_to_author.len(), slots);
        let in_authors: usize = out.authors.iter().map(|a| a.mentions.len()).sum();
        prop_assert_eq!(in_authors, slots);
        let names: HashMap<MentionRef, PersonName> = corpus
            .papers
            .iter()
            .flat_map(|p| p.authors.iter().map(move |a| ((p.corpus_id, a.position), PersonName::parse(&a.raw_name))))
            .collect();
        for a in &out.authors {
            for (i, x) in a.mentions.iter().enumerate() {
                prop_assert_eq!(out.mention_to_author[x], a.author_id);
                for y in &a.mentions[i + 1..] {
                    prop_assert_ne!(name_compatibility(&names[x], &names[y]), NameCompat::Incompatible);
                }
            }
        }
        let again = disambiguate_authors(&corpus.papers, &corpus.inst_links, &model, 0.75);
        prop_assert_eq!(out.mention_to_author, again.mention_to_author);
    }

    #[test]
    fn fos_labels_are_closed_and_na_is_exclusive(text in text_strategy(), empty in any::<bool>()) {
        let (title, abs) = if empty { (String::new(), String::new()) } else { text };
        let labels = classify_fos(&synth::bare_paper(1, &title, &abs, &[], None), fos_model());
        prop_assert!(!labels.is_empty());
        if labels.contains(&FieldLabel::NotApplicable) {
            prop_assert_eq!(labels.len(), 1);
        }
        for l in &labels {
            prop_assert!(*l == FieldLabel::NotApplicable || FieldLabel::FIELDS.contains(l));
        }
    }

    #[test]
    fn pages_are_disjoint_and_cover_the_listing(seed in 0u64..500, limit in 1usize..12) {
        let g = synth::citation_graph(seed, 40, 160);
        for p in g.papers() {
            let full = g.get_citations(p.corpus_id, 0, 1000).unwrap();
            let mut union = Vec::new();
            let mut offset = 0;
            while offset < full.total {
                let page = g.get_citations(p.corpus_id, offset, limit).unwrap();
                prop_assert_eq!(page.total, full.total);
                prop_assert!(page.items.len() <= limit);
                union.extend(page.items);
                offset += limit;
            }
            prop_assert_eq!(&union, &full.items);
        }
        let word = g.paper(1).unwrap().title.split_whitespace().next().unwrap().to_owned();
        let first = g.search_papers(&word, &SearchFilters::default(), 0, 1000).unwrap();
        prop_assert_eq!(first, g.search_papers(&word, &SearchFilters::default(), 0, 1000).unwrap());
    }

    #[test]
    fn coi_is_symmetric(seed in 0u64..1000) {
        let g = synth::review_graph(seed, 12, 20);
        for r in 1..=12u64 {
            for a in 1..=12u64 {
                prop_assert_eq!(coi_score(r, &[a], &g).unwrap(), coi_score(a, &[r], &g).unwrap());
            }
        }
    }

    #[test]
    fn adding_a_paper_never_worsens_a_match(
        papers in prop::collection::vec(text_strategy(), 3..7),
        extra in text_strategy(),
        submission in text_strategy(),
    ) {
        let before = graph_with_reviewer(&papers, false);
        let mut grown = papers.clone();
        grown.push(extra);
        let after = graph_with_reviewer(&grown, true);
        let s0 = match_score(1, &submission.0, &submission.1, &before).unwrap();
        let s1 = match_score(1, &submission.0, &submission.1, &after).unwrap();
        prop_assert!(s1 <= s0 + 1e-12, "{s1} > {s0}");
    }

    #[test]
    fn recommendations_stay_inside_the_index(seed in 0u64..200, k in 1usize..30) {
        let now = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let corpus = synth::recommend_corpus(7, 40, now);
        let g = &corpus.graph;
        let index = RecentIndex::build(g, now);
        let ids: Vec<u64> = g.papers().map(|p| p.corpus_id).collect();
        let positives = vec![ids[seed as usize % ids.len()]];
        let negatives = vec![ids[(seed as usize * 7 + 1) % ids.len()]];
        prop_assume!(positives != negatives);
        let got = Recommender::new(g).recommend(&index, &positives, &negatives, k, seed).unwrap();
        prop_assert!(got.len() <= k.min(500));
        for r in &got {
            prop_assert!(index.contains(r.corpus_id));
            prop_assert!(!positives.contains(&r.corpus_id) && !negatives.contains(&r.corpus_id));
        }
        prop_assert!(got.windows(2).all(|w| w[0].score > w[1].score || (w[0].score == w[1].score && w[0].corpus_id < w[1].corpus_id)));
    }
}
