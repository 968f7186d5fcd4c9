//! The bundled demo dataset: a small multi-source corpus with the venue
//! knowledge base, institution registry and venue labels it needs.
//!
//! Everything is generated from a fixed seed; the files under `data/demo`
//! are this module's output (`cargo run -p stag-core --example make_demo`).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::enrich::{FieldLabel, VenueLabels};
use crate::kbnorm::{iso4_abbreviate, AbbrevTable, InstitutionRecord, VenueRecord};
use crate::synth::{self, field_words, initialed, FIRST_NAMES, GENERIC_WORDS, LAST_NAMES};

pub const DEMO_SEED: u64 = 7_301;
pub const DEMO_PAPERS: usize = 200;
pub const DEMO_REGISTRY_SIZE: usize = 1000;

pub fn demo_now() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 6, 1).unwrap()
}

/// (venue id, canonical name, extra variants, field)
const VENUES: [(&str, &str, &[&str], FieldLabel); 25] = [
    ("V01", "Journal of Machine Learning Research", &["JMLR"], FieldLabel::ComputerScience),
    ("V02", "Neural Information Processing Systems", &["NeurIPS", "NIPS", "Advances in Neural Information Processing Systems"], FieldLabel::ComputerScience),
    ("V03", "International Conference on Machine Learning", &["ICML"], FieldLabel::ComputerScience),
    ("V04", "Computational Linguistics", &[], FieldLabel::ComputerScience),
    ("V05", "Journal of Artificial Intelligence Research", &["JAIR"], FieldLabel::ComputerScience),
    ("V06", "The Lancet", &["Lancet"], FieldLabel::Medicine),
    ("V07", "Journal of Clinical Oncology", &["JCO"], FieldLabel::Medicine),
    ("V08", "New England Journal of Medicine", &["NEJM", "The New England Journal of Medicine"], FieldLabel::Medicine),
    ("V09", "Annals of Internal Medicine", &[], FieldLabel::Medicine),
    ("V10", "Journal of Clinical Investigation", &["JCI"], FieldLabel::Medicine),
    ("V11", "Cell", &[], FieldLabel::Biology),
    ("V12", "Bioinformatics", &[], FieldLabel::Biology),
    ("V13", "Journal of Molecular Biology", &["JMB"], FieldLabel::Biology),
    ("V14", "Nucleic Acids Research", &["NAR"], FieldLabel::Biology),
    ("V15", "Molecular Biology and Evolution", &["MBE"], FieldLabel::Biology),
    ("V16", "Physical Review Letters", &["PRL", "Phys Rev Lett"], FieldLabel::Physics),
    ("V17", "Journal of Applied Physics", &[], FieldLabel::Physics),
    ("V18", "Nuclear Physics", &[], FieldLabel::Physics),
    ("V19", "Journal of Statistical Physics", &[], FieldLabel::Physics),
    ("V20", "Reports on Progress in Physics", &[], FieldLabel::Physics),
    ("V21", "American Economic Review", &["AER"], FieldLabel::Economics),
    ("V22", "Econometrica", &[], FieldLabel::Economics),
    ("V23", "Journal of Political Economy", &["JPE"], FieldLabel::Economics),
    ("V24", "Quarterly Journal of Economics", &["QJE", "The Quarterly Journal of Economics"], FieldLabel::Economics),
    ("V25", "Review of Economic Studies", &["The Review of Economic Studies"], FieldLabel::Economics),
];

const DEMO_FIELDS: [FieldLabel; 5] = [
    FieldLabel::ComputerScience,
    FieldLabel::Medicine,
    FieldLabel::Biology,
    FieldLabel::Physics,
    FieldLabel::Economics,
];

const DEPARTMENTS: [&str; 6] = [
    "Department of Computer Science",
    "School of Medicine",
    "Department of Biology",
    "Department of Physics",
    "Department of Economics",
    "Center for Data Science",
];

const SOURCES: [&str; 4] = ["crossref", "arxiv", "pubmed", "publisher"];

/// Generated demo inputs.
#[derive(Debug, Clone)]
pub struct DemoDataset {
    pub venues: Vec<VenueRecord>,
    pub venue_labels: VenueLabels,
    pub institutions: Vec<InstitutionRecord>,
    /// Source name to JSONL lines. A few lines are deliberately bad.
    pub sources: BTreeMap<String, Vec<String>>,
}

/// The committed venue knowledge base. Every venue lists its ISO-4 form
/// under the bundled abbreviation table among its variants.
pub fn demo_venues() -> Vec<VenueRecord> {
    let table = AbbrevTable::bundled();
    VENUES
        .iter()
        .map(|(id, name, variants, _)| {
            let mut all: BTreeSet<String> = variants.iter().map(|v| v.to_string()).collect();
            all.insert(name.to_string());
            all.insert(iso4_abbreviate(name, &table));
            VenueRecord {
                venue_id: id.to_string(),
                canonical_name: name.to_string(),
                variants: all,
                issn: None,
            }
        })
        .collect()
}

pub fn demo_venue_labels() -> VenueLabels {
    VENUES
        .iter()
        .map(|(id, _, _, field)| (id.to_string(), BTreeSet::from([*field])))
        .collect()
}

struct Person {
    first: String,
    middle: Option<char>,
    last: String,
    affiliation: String,
    email: String,
}

impl Person {
    fn full(&self) -> String {
        match self.middle {
            Some(m) => format!("{} {m}. {}", self.first, self.last),
            None => format!("{} {}", self.first, self.last),
        }
    }
}

struct Group {
    field: FieldLabel,
    members: Vec<usize>,
    venues: Vec<usize>,
}

struct TruthPaper {
    title: String,
    abstract_text: String,
    authors: Vec<usize>,
    venue: usize,
    date: NaiveDate,
    doi: Option<String>,
    arxiv: Option<String>,
    pdf_hash: Option<String>,
    bibliography: Vec<Value>,
    sentences: Vec<Value>,
}

fn capitalized(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn venue_string<R: Rng>(rng: &mut R, venue: &VenueRecord, year: i32) -> String {
    let alternatives: Vec<&String> = venue.variants.iter().filter(|v| **v != venue.canonical_name).collect();
    match rng.gen_range(0..6) {
        0 | 1 => venue.canonical_name.clone(),
        2 => format!("Proceedings of the {}th {} {year}", rng.gen_range(4..40), venue.canonical_name),
        3 => format!("{}, vol. {}", venue.canonical_name, rng.gen_range(1..90)),
        _ => alternatives.choose(rng).map(|v| v.to_string()).unwrap_or_else(|| venue.canonical_name.clone()),
    }
}

/// Build the demo dataset. Deterministic.
pub fn demo_dataset() -> DemoDataset {
    let mut rng = synth::rng(DEMO_SEED);
    let venues = demo_venues();
    let institutions = synth::institution_registry(DEMO_SEED, DEMO_REGISTRY_SIZE);
    let now = demo_now();

    let mut people: Vec<Person> = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    for g in 0..16 {
        let field = DEMO_FIELDS[g % DEMO_FIELDS.len()];
        let inst = institutions.choose(&mut rng).unwrap();
        let department = DEPARTMENTS.choose(&mut rng).unwrap();
        let field_venues: Vec<usize> = VENUES
            .iter()
            .enumerate()
            .filter(|(_, v)| v.3 == field)
            .map(|(i, _)| i)
            .collect();
        let size = rng.gen_range(3..=5);
        let mut members = Vec::new();
        for _ in 0..size {
            let first = FIRST_NAMES.choose(&mut rng).unwrap().to_string();
            let last = LAST_NAMES.choose(&mut rng).unwrap().to_string();
            let name = if rng.gen_bool(0.3) {
                inst.aliases.iter().next().cloned().unwrap_or_else(|| inst.name.clone())
            } else {
                inst.name.clone()
            };
            members.push(people.len());
            people.push(Person {
                email: format!("{}.{}@{}.edu", first, last, inst.inst_id).to_lowercase(),
                first,
                middle: rng.gen_bool(0.4).then(|| rng.gen_range(b'A'..=b'Z') as char),
                last,
                affiliation: format!("{department}, {name}, {}, {}", inst.city, inst.country),
            });
        }
        groups.push(Group {
            field,
            members,
            venues: field_venues.choose_multiple(&mut rng, 2).copied().collect(),
        });
    }

    let mut papers: Vec<TruthPaper> = Vec::with_capacity(DEMO_PAPERS);
    for i in 0..DEMO_PAPERS {
        let group = &groups[rng.gen_range(0..groups.len())];
        let words = field_words(group.field);
        let lead = *group.members.choose(&mut rng).unwrap();
        let mut authors = vec![lead];
        for &m in &group.members {
            if m != lead && rng.gen_bool(0.5) {
                authors.push(m);
            }
        }
        if rng.gen_bool(0.1) {
            let outsider = rng.gen_range(0..people.len());
            if !authors.contains(&outsider) {
                authors.push(outsider);
            }
        }
        let n = rng.gen_range(6..=9);
        let mut title_words: Vec<String> = (0..n).map(|_| words.choose(&mut rng).unwrap().to_string()).collect();
        title_words.insert(rng.gen_range(0..=n), synth::pseudo_word(&mut rng));
        // Follow-up work often reuses the opening words of an earlier title.
        let siblings: Vec<usize> = (0..papers.len()).filter(|&j| VENUES[papers[j].venue].3 == group.field).collect();
        if !siblings.is_empty() && rng.gen_bool(0.15) {
            let j = *siblings.choose(&mut rng).unwrap();
            for (k, w) in papers[j].title.split_whitespace().take(3).enumerate() {
                title_words[k] = w.to_lowercase();
            }
        }
        let title = title_words.iter().map(|w| capitalized(w)).collect::<Vec<_>>().join(" ");
        let abstract_words: Vec<&str> = (0..rng.gen_range(40..70))
            .map(|_| {
                if rng.gen_bool(0.65) {
                    *words.choose(&mut rng).unwrap()
                } else {
                    *GENERIC_WORDS.choose(&mut rng).unwrap()
                }
            })
            .collect();
        // Papers are in publication order; the last quarter are recent.
        let days_back = if i >= DEMO_PAPERS * 3 / 4 {
            ((DEMO_PAPERS - 1 - i) * 120 / (DEMO_PAPERS / 4)) as i64
        } else {
            120 + ((DEMO_PAPERS * 3 / 4 - i) * 1600 / (DEMO_PAPERS * 3 / 4)) as i64
        };
        let date = now - Duration::days(days_back);
        let venue = *group.venues.choose(&mut rng).unwrap();
        let arxiv_ok = matches!(group.field, FieldLabel::ComputerScience | FieldLabel::Physics);
        papers.push(TruthPaper {
            title,
            abstract_text: format!("{}.", capitalized(&abstract_words.join(" "))),
            authors,
            venue,
            date,
            doi: rng.gen_bool(0.8).then(|| format!("10.5555/demo.{:04}", i + 1)),
            arxiv: (arxiv_ok && rng.gen_bool(0.6)).then(|| format!("{}.{:05}", date.format("%y%m"), 10000 + i)),
            pdf_hash: rng.gen_bool(0.5).then(|| format!("{:016x}", rng.gen::<u64>())),
            bibliography: Vec::new(),
            sentences: Vec::new(),
        });
    }

    // References point at earlier papers, mostly from the same field.
    for i in 1..papers.len() {
        let field = VENUES[papers[i].venue].3;
        let earlier: Vec<usize> = (0..i).collect();
        let mut cited: Vec<usize> = Vec::new();
        for _ in 0..rng.gen_range(2..=7).min(i) {
            let same_field: Vec<usize> = earlier.iter().copied().filter(|&j| VENUES[papers[j].venue].3 == field).collect();
            let pool = if !same_field.is_empty() && rng.gen_bool(0.85) { &same_field } else { &earlier };
            let j = *pool.choose(&mut rng).unwrap();
            if !cited.contains(&j) {
                cited.push(j);
            }
        }
        let mut bibliography = Vec::new();
        for &j in &cited {
            let p = &papers[j];
            let names: Vec<String> = p.authors.iter().map(|&a| initialed(&people[a].full())).collect();
            let title = if rng.gen_bool(0.3) { synth::title_prefix(&p.title, 0.7) } else { p.title.clone() };
            let year = p.date.format("%Y").to_string().parse::<i32>().unwrap();
            bibliography.push(json!({
                "raw": format!("{}. {}. {}, {}.", names.join(", "), title, venues[p.venue].canonical_name, year),
                "title": title,
                "authors": names,
                "year": year,
                "venue": venues[p.venue].canonical_name,
            }));
        }
        // One or two references to work outside the corpus.
        for _ in 0..rng.gen_range(1..=2) {
            let title: Vec<String> = (0..6).map(|_| capitalized(&synth::pseudo_word(&mut rng))).collect();
            let author = format!("{} {}", FIRST_NAMES.choose(&mut rng).unwrap(), LAST_NAMES.choose(&mut rng).unwrap());
            bibliography.push(json!({
                "raw": format!("{}. {}. 1999.", initialed(&author), title.join(" ")),
                "title": title.join(" "),
                "authors": [initialed(&author)],
                "year": 1999,
            }));
        }
        let n_bib = bibliography.len();
        let mut sentences = Vec::new();
        for k in 0..n_bib {
            let solo = rng.gen_range(0..=3);
            for _ in 0..solo {
                let filler: Vec<&str> = GENERIC_WORDS.choose_multiple(&mut rng, 6).copied().collect();
                let text = match rng.gen_range(0..8) {
                    0 => format!("We build upon [{}] and {}.", k + 1, filler.join(" ")),
                    1 => format!("As in Table {} of [{}], {}.", rng.gen_range(1..5), k + 1, filler.join(" ")),
                    _ => format!("Prior work [{}] {}.", k + 1, filler.join(" ")),
                };
                sentences.push(json!({"text": text, "cites": [k]}));
            }
            if n_bib > 1 && rng.gen_bool(0.5) {
                let other = (k + 1 + rng.gen_range(0..n_bib - 1)) % n_bib;
                let filler: Vec<&str> = GENERIC_WORDS.choose_multiple(&mut rng, 5).copied().collect();
                sentences.push(json!({
                    "text": format!("Related approaches [{}, {}] {}.", k + 1, other + 1, filler.join(" ")),
                    "cites": [k, other],
                }));
            }
        }
        papers[i].bibliography = bibliography;
        papers[i].sentences = sentences;
    }

    let mut sources: BTreeMap<String, Vec<String>> = SOURCES.iter().map(|s| (s.to_string(), Vec::new())).collect();
    for (i, p) in papers.iter().enumerate() {
        let n_mentions = rng.gen_range(1..=3);
        let mut chosen = SOURCES.to_vec();
        chosen.shuffle(&mut rng);
        chosen.truncate(n_mentions);
        for (k, source) in chosen.iter().enumerate() {
            let mut title = p.title.clone();
            match rng.gen_range(0..5) {
                0 => title = title.to_uppercase(),
                1 => title = title.to_lowercase(),
                2 => title.push('.'),
                _ => {}
            }
            let initial = rng.gen_bool(0.3);
            let authors: Vec<Value> = p
                .authors
                .iter()
                .map(|&a| {
                    let person = &people[a];
                    let name = if initial { initialed(&person.full()) } else { person.full() };
                    let mut obj = json!({"name": name});
                    if rng.gen_bool(0.8) {
                        obj["affiliation"] = json!(person.affiliation);
                    }
                    if rng.gen_bool(0.2) {
                        obj["email"] = json!(person.email);
                    }
                    obj
                })
                .collect();
            let year: i32 = p.date.format("%Y").to_string().parse().unwrap();
            let mut ids = serde_json::Map::new();
            if let Some(doi) = p.doi.as_ref().filter(|_| rng.gen_bool(0.9)) {
                ids.insert("DOI".into(), json!(doi));
            }
            if let Some(arxiv) = p.arxiv.as_ref().filter(|_| *source == "arxiv") {
                ids.insert("ArXiv".into(), json!(arxiv));
            }
            if *source == "pubmed" {
                ids.insert("PubMed".into(), json!(format!("{}", 30_000_000 + i)));
            }
            let mut record = json!({
                "id": format!("{source}-{:04}", i + 1),
                "title": title,
                "authors": authors,
                "venue": venue_string(&mut rng, &venues[p.venue], year),
                "date": if *source == "crossref" { json!(year) } else { json!(p.date.to_string()) },
                "externalIds": ids,
            });
            if *source != "crossref" || rng.gen_bool(0.3) {
                record["abstract"] = json!(p.abstract_text);
            }
            if let Some(h) = p.pdf_hash.as_ref().filter(|_| *source == "arxiv" || *source == "publisher") {
                record["pdfSha"] = json!(h);
            }
            // The first mention carries the parsed full text.
            if k == 0 && !p.bibliography.is_empty() {
                record["bibliography"] = json!(p.bibliography);
                record["bodySentences"] = json!(p.sentences);
            }
            sources.get_mut(*source).unwrap().push(record.to_string());
        }
    }
    let publisher = sources.get_mut("publisher").unwrap();
    publisher.push(r#"{"id": "publisher-broken", "title": "Truncated record"#.to_owned());
    publisher.push(json!({"id": "publisher-9999", "title": "", "externalIds": {"DOI": "not-a-doi"}}).to_string());
    sources
        .get_mut("crossref")
        .unwrap()
        .push(json!({"id": "crossref-9998", "title": "Erratum", "externalIds": {"DOI": "doi:10.5555/bad id"}, "date": 2023}).to_string());

    DemoDataset {
        venues,
        venue_labels: demo_venue_labels(),
        institutions,
        sources,
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rows {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    f.flush()
}

pub const DEMO_CONFIG: &str = r#"# Demo pipeline configuration. Relative paths resolve against this file.
corpus = "corpus"
venue_kb = "venues.jsonl"
institutions = "institutions.jsonl"
venue_labels = "venue_fields.tsv"
output = "snapshots"
seed = 7301
now = "2024-06-01"
"#;

/// Write the dataset in its on-disk layout under `dir`.
pub fn write_demo(data: &DemoDataset, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("corpus"))?;
    write_jsonl(&dir.join("venues.jsonl"), &data.venues)?;
    write_jsonl(&dir.join("institutions.jsonl"), &data.institutions)?;
    let mut tsv = String::from("# venue_id\tfields of study\n");
    for (venue, labels) in &data.venue_labels {
        let names: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
        tsv.push_str(&format!("{venue}\t{}\n", names.join(",")));
    }
    std::fs::write(dir.join("venue_fields.tsv"), tsv)?;
    for (source, lines) in &data.sources {
        let mut body = lines.join("\n");
        body.push('\n');
        std::fs::write(dir.join("corpus").join(format!("{source}.jsonl")), body)?;
    }
    std::fs::write(dir.join("pipeline.toml"), DEMO_CONFIG)
}
