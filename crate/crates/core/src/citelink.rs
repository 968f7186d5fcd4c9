//! Linking bibliography entries to canonical papers and building citation edges.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dedup::Paper;
use crate::ingest::BibEntry;
use crate::text::{char_ngrams, edit_ratio, is_stopword, jaccard, normalize_text, NormText, PersonName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CitationIntent {
    #[default]
    Unspecified,
    Background,
    Method,
    Result,
}

/// A body sentence containing the citation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationContext {
    pub text: String,
    /// Number of other works cited in the same sentence.
    pub co_cited: u32,
}

impl CitationContext {
    pub fn is_solo(&self) -> bool {
        self.co_cited == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationEdge {
    pub citing: u64,
    pub cited: u64,
    pub contexts: Vec<CitationContext>,
    #[serde(default)]
    pub intent: CitationIntent,
    #[serde(default)]
    pub is_influential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Minimum weighted score for a parsed entry to link.
    pub threshold: f64,
    /// Minimum edit ratio for the raw-string fallback.
    pub raw_threshold: f64,
    /// Number of token-overlap candidates considered.
    pub top_k: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            raw_threshold: 0.8,
            top_k: 20,
        }
    }
}

#[derive(Debug, Clone)]
struct IndexedPaper {
    title: NormText,
    last_names: HashSet<String>,
    year: Option<i32>,
    /// Normalized "title authors year", the raw-string fallback target.
    citation_string: String,
}

/// Lookup structures over canonical papers.
#[derive(Debug, Clone, Default)]
pub struct PaperIndex {
    exact: HashMap<NormText, Vec<u64>>,
    tokens: HashMap<String, Vec<u64>>,
    trigrams: HashMap<String, Vec<u64>>,
    papers: BTreeMap<u64, IndexedPaper>,
}

impl PaperIndex {
    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Corpus ids whose normalized title equals `title` after normalization.
    pub fn exact_title(&self, title: &str) -> &[u64] {
        self.exact.get(&normalize_text(title)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn token_postings(&self, token: &str) -> &[u64] {
        self.tokens.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Top-`k` papers by count of shared non-stopword tokens, requiring at
    /// least `min(2, |query tokens|)` shared. Ties go to the smaller id.
    fn overlap_candidates(&self, query: &NormText, k: usize) -> Vec<u64> {
        let query_tokens: HashSet<&str> = query.tokens().filter(|t| !is_stopword(t)).collect();
        let required = query_tokens.len().min(2);
        if required == 0 {
            return Vec::new();
        }
        let mut overlap: HashMap<u64, usize> = HashMap::new();
        for t in &query_tokens {
            for id in self.token_postings(t) {
                *overlap.entry(*id).or_default() += 1;
            }
        }
        let mut ranked: Vec<(u64, usize)> = overlap.into_iter().filter(|(_, n)| *n >= required).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(k).map(|(id, _)| id).collect()
    }

    /// Top-`k` papers by count of shared title character trigrams.
    fn trigram_candidates(&self, query: &NormText, k: usize) -> Vec<u64> {
        let mut overlap: HashMap<u64, usize> = HashMap::new();
        for g in title_trigrams(query) {
            for id in self.trigrams.get(&g).map(Vec::as_slice).unwrap_or(&[]) {
                *overlap.entry(*id).or_default() += 1;
            }
        }
        let mut ranked: Vec<(u64, usize)> = overlap.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(k).map(|(id, _)| id).collect()
    }
}

fn title_trigrams(title: &NormText) -> HashSet<String> {
    if title.as_str().chars().count() < 3 {
        return HashSet::new();
    }
    char_ngrams(title, 3, 3).into_iter().collect()
}

fn last_names<'a>(names: impl Iterator<Item = &'a str>) -> HashSet<String> {
    names
        .map(|n| PersonName::parse(n).last)
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn build_paper_index(papers: &[Paper]) -> PaperIndex {
    let mut index = PaperIndex::default();
    for p in papers {
        let title = normalize_text(&p.title);
        let names: Vec<&str> = p.authors.iter().map(|a| a.raw_name.as_str()).collect();
        let citation_string = normalize_text(&format!(
            "{} {} {}",
            p.title,
            names.join(" "),
            p.year().map(|y| y.to_string()).unwrap_or_default()
        ))
        .into_string();
        if !title.is_empty() {
            index.exact.entry(title.clone()).or_default().push(p.corpus_id);
        }
        let distinct: HashSet<&str> = title.tokens().collect();
        for t in distinct {
            index.tokens.entry(t.to_owned()).or_default().push(p.corpus_id);
        }
        for g in title_trigrams(&title) {
            index.trigrams.entry(g).or_default().push(p.corpus_id);
        }
        index.papers.insert(
            p.corpus_id,
            IndexedPaper {
                title,
                last_names: last_names(names.into_iter()),
                year: p.year(),
                citation_string,
            },
        );
    }
    for ids in index.exact.values_mut().chain(index.tokens.values_mut()).chain(index.trigrams.values_mut()) {
        ids.sort_unstable();
        ids.dedup();
    }
    index
}

/// A resolved bibliography entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMatch {
    pub corpus_id: u64,
    pub score: f64,
}

fn year_agreement(a: Option<i32>, b: Option<i32>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) if x == y => 1.0,
        (Some(x), Some(y)) if (x - y).abs() == 1 => 0.5,
        _ => 0.0,
    }
}

/// Weighted title/author/year similarity of a parsed entry and a paper.
fn entry_score(title: &NormText, entry_last: &HashSet<String>, year: Option<i32>, paper: &IndexedPaper) -> f64 {
    let title_ratio = edit_ratio(title.as_str(), paper.title.as_str());
    let author = if entry_last.is_empty() {
        if title_ratio == 1.0 {
            1.0
        } else {
            0.0
        }
    } else if paper.last_names.is_empty() {
        0.0
    } else {
        jaccard(entry_last, &paper.last_names)
    };
    0.6 * title_ratio + 0.25 * author + 0.15 * year_agreement(year, paper.year)
}

/// Resolve one bibliography entry against the index.
///
/// Candidates are exact normalized-title hits plus the top token-overlap
/// papers. The best-scoring candidate is returned if it clears the threshold;
/// ties go to the smaller corpus id. When no such candidate links (noisy
/// titles can share no exact token with their target), the top papers by
/// shared title trigrams are added and the best is taken again.
pub fn link_bib_entry(entry: &BibEntry, index: &PaperIndex, config: &LinkConfig) -> Option<LinkMatch> {
    let title = normalize_text(&entry.title);
    if title.is_empty() {
        return link_raw(entry, index, config);
    }
    let mut candidates: Vec<u64> = index.exact.get(&title).cloned().unwrap_or_default();
    candidates.extend(index.overlap_candidates(&title, config.top_k));
    candidates.sort_unstable();
    candidates.dedup();
    let entry_last = last_names(entry.author_names.iter().map(String::as_str));
    let score = |id| entry_score(&title, &entry_last, entry.year, &index.papers[&id]);
    if let Some(found) = best_of(candidates.clone(), config.threshold, score) {
        return Some(found);
    }
    candidates.extend(index.trigram_candidates(&title, config.top_k));
    candidates.sort_unstable();
    candidates.dedup();
    best_of(candidates, config.threshold, score)
}

fn link_raw(entry: &BibEntry, index: &PaperIndex, config: &LinkConfig) -> Option<LinkMatch> {
    let raw = normalize_text(&entry.raw);
    if raw.is_empty() {
        return None;
    }
    let candidates = {
        let mut c = index.overlap_candidates(&raw, config.top_k);
        c.sort_unstable();
        c
    };
    best_of(candidates, config.raw_threshold, |id| {
        edit_ratio(raw.as_str(), &index.papers[&id].citation_string)
    })
}

/// Highest score among ascending `candidates`; first (smallest id) wins ties.
fn best_of(candidates: Vec<u64>, threshold: f64, score: impl Fn(u64) -> f64) -> Option<LinkMatch> {
    let mut best: Option<LinkMatch> = None;
    for id in candidates {
        let s = score(id);
        if best.is_none_or(|b| s > b.score) {
            best = Some(LinkMatch { corpus_id: id, score: s });
        }
    }
    best.filter(|b| b.score >= threshold)
}

/// Link every bibliography entry of every paper and merge the results into
/// unique `(citing, cited)` edges with their context sentences.
pub fn build_citation_graph(papers: &[Paper], index: &PaperIndex, config: &LinkConfig) -> Vec<CitationEdge> {
    let per_paper: Vec<Vec<CitationEdge>> = papers.par_iter().map(|p| edges_of(p, index, config)).collect();
    let mut merged: BTreeMap<(u64, u64), CitationEdge> = BTreeMap::new();
    for edge in per_paper.into_iter().flatten() {
        match merged.get_mut(&(edge.citing, edge.cited)) {
            Some(existing) => merge_contexts(&mut existing.contexts, edge.contexts),
            None => {
                merged.insert((edge.citing, edge.cited), edge);
            }
        }
    }
    merged.into_values().collect()
}

fn merge_contexts(into: &mut Vec<CitationContext>, more: Vec<CitationContext>) {
    for c in more {
        if !into.iter().any(|e| e.text == c.text) {
            into.push(c);
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum CiteTarget {
    Paper(u64),
    Unresolved(usize),
}

fn edges_of(paper: &Paper, index: &PaperIndex, config: &LinkConfig) -> Vec<CitationEdge> {
    let mut edges: BTreeMap<u64, CitationEdge> = BTreeMap::new();
    for source in &paper.references {
        let resolved: Vec<Option<u64>> = source
            .bibliography
            .iter()
            .map(|e| link_bib_entry(e, index, config).map(|m| m.corpus_id))
            .collect();
        let target = |i: usize| match resolved.get(i).copied().flatten() {
            Some(id) => CiteTarget::Paper(id),
            None => CiteTarget::Unresolved(i),
        };
        for (bib_idx, cited) in resolved.iter().enumerate() {
            let Some(cited) = *cited else { continue };
            if cited == paper.corpus_id {
                continue;
            }
            let contexts: Vec<CitationContext> = source
                .body_sentences
                .iter()
                .filter(|s| s.cites.contains(&bib_idx))
                .map(|s| {
                    let targets: HashSet<CiteTarget> = s.cites.iter().map(|&i| target(i)).collect();
                    CitationContext {
                        text: s.text.clone(),
                        co_cited: targets.len().saturating_sub(1) as u32,
                    }
                })
                .collect();
            let edge = edges.entry(cited).or_insert_with(|| CitationEdge {
                citing: paper.corpus_id,
                cited,
                contexts: Vec::new(),
                intent: CitationIntent::Unspecified,
                is_influential: false,
            });
            merge_contexts(&mut edge.contexts, contexts);
        }
    }
    edges.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dedup::SourceReferences;
    use crate::ingest::{AuthorMention, BodySentence};
    use chrono::NaiveDate;

    pub(crate) fn paper(id: u64, title: &str, authors: &[&str], year: i32) -> Paper {
        Paper {
            corpus_id: id,
            member_mentions: vec![format!("m{id}")],
            title: title.into(),
            abstract_text: String::new(),
            venue_raw: String::new(),
            venue_id: None,
            pub_date: NaiveDate::from_ymd_opt(year, 1, 1),
            authors: authors
                .iter()
                .enumerate()
                .map(|(i, n)| AuthorMention {
                    raw_name: n.to_string(),
                    position: i as u32,
                    affiliation_raw: String::new(),
                    email: None,
                })
                .collect(),
            external_ids: Default::default(),
            fields_of_study: Default::default(),
            embedding: None,
            references: vec![],
        }
    }

    fn bib(title: &str, authors: &[&str], year: Option<i32>) -> BibEntry {
        BibEntry {
            raw: format!("{} {title}", authors.join(", ")),
            title: title.into(),
            author_names: authors.iter().map(|s| s.to_string()).collect(),
            year,
            venue: None,
        }
    }

    #[test]
    fn index_examples() {
        assert!(build_paper_index(&[]).is_empty());
        let idx = build_paper_index(&[paper(1, "Attention Is All You Need", &["A. Vaswani"], 2017)]);
        assert_eq!(idx.exact_title("attention is all you need!"), &[1]);
        let idx = build_paper_index(&[paper(1, "Same", &[], 2000), paper(2, "SAME", &[], 2001)]);
        assert_eq!(idx.exact_title("same"), &[1, 2]);
    }

    #[test]
    fn exact_title_and_author_links() {
        let idx = build_paper_index(&[
            paper(1, "Attention Is All You Need", &["Ashish Vaswani", "Noam Shazeer"], 2017),
            paper(2, "Deep Residual Learning for Image Recognition", &["Kaiming He"], 2016),
        ]);
        let m = link_bib_entry(&bib("Attention is all you need", &["A. Vaswani"], Some(2017)), &idx, &LinkConfig::default()).unwrap();
        assert_eq!(m.corpus_id, 1);
        assert!(m.score >= 0.85, "{}", m.score);
        assert!(link_bib_entry(&bib("Quantum Chromodynamics On Lattices", &["X"], Some(2017)), &idx, &LinkConfig::default()).is_none());
    }

    #[test]
    fn missing_authors_rule() {
        let idx = build_paper_index(&[paper(1, "Attention Is All You Need", &["Ashish Vaswani"], 2017)]);
        let m = link_bib_entry(&bib("Attention is all you need", &[], None), &idx, &LinkConfig::default()).unwrap();
        assert!((m.score - 0.85).abs() < 1e-12);
        // Near-exact title without authors gets no author credit and fails.
        assert!(link_bib_entry(&bib("Attention is all you needed", &[], None), &idx, &LinkConfig::default()).is_none());
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let idx = build_paper_index(&[paper(5, "Same Title Words", &["A Smith"], 2000), paper(3, "Same Title Words", &["A Smith"], 2000)]);
        let m = link_bib_entry(&bib("Same title words", &["A. Smith"], Some(2000)), &idx, &LinkConfig::default()).unwrap();
        assert_eq!(m.corpus_id, 3);
    }

    #[test]
    fn raw_fallback() {
        let idx = build_paper_index(&[paper(1, "Attention Is All You Need", &["Ashish Vaswani"], 2017)]);
        let entry = BibEntry {
            raw: "Attention is all you need. Ashish Vaswani, 2017".into(),
            title: String::new(),
            author_names: vec![],
            year: None,
            venue: None,
        };
        assert_eq!(link_bib_entry(&entry, &idx, &LinkConfig::default()).unwrap().corpus_id, 1);
    }

    #[test]
    fn citation_graph_examples() {
        let mut a = paper(1, "Citing Paper About Graphs", &["Ann Lee"], 2020);
        let b = paper(2, "Graph Attention Networks Revisited", &["Bo Chen"], 2018);
        a.references = vec![SourceReferences {
            mention_id: "m1".into(),
            bibliography: vec![
                bib("Graph attention networks revisited", &["B. Chen"], Some(2018)),
                bib("Graph Attention Networks Revisited", &["Bo Chen"], Some(2018)),
                bib("Citing paper about graphs", &["Ann Lee"], Some(2020)),
                bib("Something entirely unknown here", &["Z"], None),
            ],
            body_sentences: vec![
                BodySentence { text: "We follow [1].".into(), cites: vec![0] },
                BodySentence { text: "See [2] and [4].".into(), cites: vec![1, 3] },
                BodySentence { text: "Self [3].".into(), cites: vec![2] },
            ],
        }];
        let papers = vec![a, b];
        let idx = build_paper_index(&papers);
        let edges = build_citation_graph(&papers, &idx, &LinkConfig::default());
        assert_eq!(edges.len(), 1);
        let e = &edges[0];
        assert_eq!((e.citing, e.cited), (1, 2));
        assert_eq!(e.contexts.len(), 2);
        assert_eq!(e.contexts[0], CitationContext { text: "We follow [1].".into(), co_cited: 0 });
        assert_eq!(e.contexts[1].co_cited, 1);
        assert_eq!(e.intent, CitationIntent::Unspecified);
    }
}
