//! Seeded synthetic corpora with ground truth, used by tests, the bundled
//! models, and the demo dataset.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::authors::{Author, MentionRef};
use crate::citelink::CitationEdge;
use crate::dedup::Paper;
use crate::enrich::{FieldLabel, VenueLabels};
use crate::graphstore::{build_graph, Graph, GraphParts};
use crate::ingest::{AuthorMention, BibEntry, ExternalIds, IdKind, PaperMention};
use crate::kbnorm::InstitutionRecord;
use crate::text::{embed_document, DEFAULT_EMBEDDING_DIM};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const GENERIC_WORDS: [&str; 48] = [
    "analysis", "approach", "method", "model", "framework", "study", "evaluation", "efficient", "robust",
    "novel", "system", "structure", "dynamic", "adaptive", "theory", "estimation", "optimization", "design",
    "performance", "scalable", "improved", "large", "scale", "general", "inference", "comparison", "effects",
    "role", "evidence", "understanding", "measuring", "predicting", "modeling", "detecting", "characterizing",
    "quantifying", "exploring", "revisiting", "rethinking", "unified", "practical", "principled", "sparse",
    "joint", "hierarchical", "local", "global", "temporal",
];

pub const MEDICINE_WORDS: [&str; 40] = [
    "patient", "clinical", "trial", "therapy", "cardiac", "tumor", "oncology", "diagnosis", "hospital",
    "mortality", "chronic", "disease", "treatment", "dose", "vaccine", "infection", "surgery", "cohort",
    "symptom", "diabetes", "insulin", "hypertension", "stroke", "renal", "pediatric", "pharmacological",
    "randomized", "placebo", "biomarker", "lesion", "syndrome", "inflammatory", "antibiotic", "prognosis",
    "epidemiology", "pulmonary", "hepatic", "neonatal", "dementia", "obesity",
];

pub const CS_WORDS: [&str; 40] = [
    "algorithm", "neural", "graph", "compiler", "software", "database", "query", "distributed", "parallel",
    "cache", "kernel", "protocol", "encryption", "network", "transformer", "embedding", "classifier",
    "reinforcement", "gradient", "convolutional", "parser", "runtime", "scheduling", "memory", "cloud",
    "latency", "benchmark", "dataset", "retrieval", "semantic", "language", "vision", "robot", "agent",
    "program", "verification", "concurrency", "hashing", "index", "token",
];

pub const PHYSICS_WORDS: [&str; 40] = [
    "quantum", "particle", "photon", "laser", "magnetic", "spin", "lattice", "plasma", "gravitational",
    "relativity", "boson", "fermion", "superconducting", "thermal", "optical", "neutron", "entanglement",
    "cosmological", "dark", "matter", "collider", "scattering", "semiconductor", "vacuum", "wave", "field",
    "energy", "momentum", "hadron", "detector", "radiation", "crystal", "phonon", "topological", "insulator",
    "cosmic", "ray", "galaxy", "stellar", "spectroscopy",
];

pub const BIOLOGY_WORDS: [&str; 40] = [
    "gene", "protein", "cell", "genome", "species", "evolution", "enzyme", "receptor", "expression",
    "sequencing", "mutation", "pathway", "organism", "membrane", "bacterial", "microbial", "ecology",
    "population", "plant", "neuron", "transcription", "chromosome", "rna", "dna", "mitochondrial",
    "phylogenetic", "metabolism", "signaling", "tissue", "stem", "embryonic", "immune", "antibody", "virus",
    "host", "symbiosis", "fungal", "marine", "habitat", "biodiversity",
];

pub const ECONOMICS_WORDS: [&str; 40] = [
    "market", "price", "labor", "trade", "monetary", "fiscal", "inflation", "wage", "firm", "household",
    "consumption", "tax", "policy", "growth", "investment", "credit", "bank", "auction", "equilibrium",
    "welfare", "inequality", "poverty", "employment", "tariff", "currency", "exchange", "demand", "supply",
    "competition", "regulation", "contract", "incentive", "insurance", "pension", "debt", "finance", "asset",
    "portfolio", "risk", "productivity",
];

/// Field vocabularies used by the generators.
pub fn field_words(label: FieldLabel) -> &'static [&'static str] {
    match label {
        FieldLabel::Medicine => &MEDICINE_WORDS,
        FieldLabel::ComputerScience => &CS_WORDS,
        FieldLabel::Physics => &PHYSICS_WORDS,
        FieldLabel::Biology => &BIOLOGY_WORDS,
        FieldLabel::Economics => &ECONOMICS_WORDS,
        _ => &GENERIC_WORDS,
    }
}

pub const FIRST_NAMES: [&str; 64] = [
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda", "David", "Elizabeth",
    "William", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah", "Charles", "Karen",
    "Wei", "Li", "Yuki", "Hiroshi", "Priya", "Arjun", "Fatima", "Omar", "Olga", "Ivan", "Sofia", "Mateo",
    "Lucas", "Emma", "Noah", "Olivia", "Liam", "Ava", "Elena", "Marco", "Giulia", "Hans", "Greta", "Pierre",
    "Camille", "Kwame", "Amara", "Chen", "Min", "Jin", "Ana", "Diego", "Lars", "Ingrid", "Raj", "Anika",
    "Tomasz", "Zofia", "Nikos", "Eleni", "Ahmed", "Leila", "Kenji", "Aiko",
];

pub const LAST_NAMES: [&str; 96] = [
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez", "Martinez",
    "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Thomas", "Taylor", "Moore", "Jackson", "Martin",
    "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez", "Clark", "Ramirez", "Lewis", "Robinson",
    "Walker", "Young", "Allen", "King", "Wright", "Scott", "Torres", "Nguyen", "Hill", "Flores", "Green",
    "Adams", "Nelson", "Baker", "Hall", "Rivera", "Campbell", "Mitchell", "Carter", "Roberts", "Wang",
    "Zhang", "Liu", "Chen", "Yang", "Huang", "Zhao", "Wu", "Zhou", "Xu", "Sun", "Ma", "Tanaka", "Suzuki",
    "Sato", "Watanabe", "Kumar", "Singh", "Sharma", "Patel", "Gupta", "Ivanov", "Petrov", "Novak", "Kowalski",
    "Nowak", "Muller", "Schmidt", "Schneider", "Fischer", "Weber", "Rossi", "Russo", "Ferrari", "Dubois",
    "Moreau", "Laurent", "Silva", "Santos", "Costa", "Hansen", "Larsen", "Jensen", "Papadopoulos", "Mensah",
    "Okafor",
];

pub const CITIES: [(&str, &str); 40] = [
    ("Boston", "USA"), ("Chicago", "USA"), ("Seattle", "USA"), ("Austin", "USA"), ("Denver", "USA"),
    ("Atlanta", "USA"), ("Portland", "USA"), ("Toronto", "Canada"), ("Montreal", "Canada"),
    ("Vancouver", "Canada"), ("London", "UK"), ("Manchester", "UK"), ("Edinburgh", "UK"), ("Bristol", "UK"),
    ("Paris", "France"), ("Lyon", "France"), ("Berlin", "Germany"), ("Munich", "Germany"),
    ("Hamburg", "Germany"), ("Zurich", "Switzerland"), ("Geneva", "Switzerland"), ("Vienna", "Austria"),
    ("Madrid", "Spain"), ("Barcelona", "Spain"), ("Milan", "Italy"), ("Rome", "Italy"), ("Amsterdam", "Netherlands"),
    ("Delft", "Netherlands"), ("Stockholm", "Sweden"), ("Oslo", "Norway"), ("Copenhagen", "Denmark"),
    ("Helsinki", "Finland"), ("Warsaw", "Poland"), ("Prague", "Czechia"), ("Tokyo", "Japan"),
    ("Kyoto", "Japan"), ("Beijing", "China"), ("Shanghai", "China"), ("Seoul", "South Korea"),
    ("Sydney", "Australia"),
];

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ra", "to", "ne", "vu", "si", "de", "po", "lan", "ter", "vos", "mur", "qui", "zen",
    "bal", "cor", "fi", "gra", "hel", "jo", "pex", "tri",
];

/// A made-up lowercase word of two to four syllables.
pub fn pseudo_word<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words.choose(rng).copied().unwrap()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Title of `n` words drawn from `pool` plus `pseudo` made-up words, title-cased.
fn make_title<R: Rng>(rng: &mut R, pool: &[&str], n: usize, pseudo: usize) -> Vec<String> {
    let mut words: Vec<String> = (0..n).map(|_| pick(rng, pool).to_owned()).collect();
    for _ in 0..pseudo {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, pseudo_word(rng));
    }
    words.iter().map(|w| capitalize(w)).collect()
}

fn make_abstract<R: Rng>(rng: &mut R, topic: &[&str], n: usize) -> String {
    let mut out: Vec<&str> = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(if rng.gen_bool(0.6) { pick(rng, topic) } else { pick(rng, &GENERIC_WORDS) });
    }
    let mut s = out.join(" ");
    s.push('.');
    capitalize(&s)
}

fn random_date<R: Rng>(rng: &mut R, from_year: i32, to_year: i32) -> NaiveDate {
    let year = rng.gen_range(from_year..=to_year);
    NaiveDate::from_ymd_opt(year, rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap()
}

fn random_person<R: Rng>(rng: &mut R) -> String {
    format!("{} {}", pick(rng, &FIRST_NAMES), pick(rng, &LAST_NAMES))
}

/// "John Ann Smith" → "J. A. Smith".
pub fn initialed(name: &str) -> String {
    let parts: Vec<&str> = name.split_whitespace().collect();
    match parts.split_last() {
        Some((last, given)) if !given.is_empty() => {
            let mut out: Vec<String> = given
                .iter()
                .filter_map(|g| g.chars().next())
                .map(|c| format!("{c}."))
                .collect();
            out.push(last.to_string());
            out.join(" ")
        }
        _ => name.to_owned(),
    }
}

fn author_mentions(names: &[String]) -> Vec<AuthorMention> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| AuthorMention {
            raw_name: n.clone(),
            position: i as u32,
            affiliation_raw: String::new(),
            email: None,
        })
        .collect()
}

/// A canonical paper with no references, fields, or venue id.
pub fn bare_paper(corpus_id: u64, title: &str, abstract_text: &str, authors: &[String], date: Option<NaiveDate>) -> Paper {
    Paper {
        corpus_id,
        member_mentions: vec![format!("synth:{corpus_id}")],
        title: title.to_owned(),
        abstract_text: abstract_text.to_owned(),
        venue_raw: String::new(),
        venue_id: None,
        pub_date: date,
        authors: author_mentions(authors),
        external_ids: ExternalIds::new(),
        fields_of_study: BTreeSet::new(),
        embedding: None,
        references: Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Deduplication

pub const DEDUP_SOURCES: [&str; 5] = ["crossref", "arxiv", "pubmed", "publisher", "dblp"];

const DEDUP_VENUES: [&str; 12] = [
    "Journal of Machine Learning Research",
    "Nature",
    "Physical Review Letters",
    "The Lancet",
    "Cell",
    "American Economic Review",
    "Neural Information Processing Systems",
    "Proceedings of the IEEE",
    "Journal of Clinical Oncology",
    "Bioinformatics",
    "Econometrica",
    "Journal of Applied Physics",
];

#[derive(Debug, Clone)]
pub struct DedupTruthPaper {
    pub title_words: Vec<String>,
    pub subtitle_words: Vec<String>,
    pub authors: Vec<String>,
    pub venue: String,
    pub date: NaiveDate,
    pub abstract_text: String,
    pub doi: Option<String>,
    pub pdf_hash: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DedupCorpus {
    pub papers: Vec<DedupTruthPaper>,
    pub mentions: Vec<PaperMention>,
    /// Ground-truth paper index of each mention.
    pub truth: Vec<usize>,
}

/// `n_papers` ground-truth papers, each observed as one to four perturbed
/// mentions from distinct sources.
///
/// Perturbations: casing, punctuation, subtitle drop, author initialing,
/// missing abstract; identifiers are carried by a subset of mentions. About
/// one paper in eight shares its first three title words with an earlier
/// paper so blocks contain hard negatives.
pub fn dedup_corpus(seed: u64, n_papers: usize) -> DedupCorpus {
    let mut rng = rng(seed);
    let pools: Vec<&[&str]> = vec![&MEDICINE_WORDS, &CS_WORDS, &PHYSICS_WORDS, &BIOLOGY_WORDS, &ECONOMICS_WORDS];
    let mut papers: Vec<DedupTruthPaper> = Vec::with_capacity(n_papers);
    for i in 0..n_papers {
        let topic = *pools.choose(&mut rng).unwrap();
        let mut pool: Vec<&str> = topic.to_vec();
        pool.extend_from_slice(&GENERIC_WORDS);
        let n = rng.gen_range(5..=9);
        let mut title_words = make_title(&mut rng, &pool, n, 1);
        if i > 0 && rng.gen_bool(0.12) {
            let sibling = &papers[rng.gen_range(0..papers.len())];
            for (k, w) in sibling.title_words.iter().take(3).enumerate() {
                title_words[k] = w.clone();
            }
        }
        let subtitle_words = if rng.gen_bool(0.3) {
            let n = rng.gen_range(2..=4);
            make_title(&mut rng, &pool, n, 0)
        } else {
            Vec::new()
        };
        let n_authors = rng.gen_range(1..=5);
        let n_abstract = rng.gen_range(30..=70);
        papers.push(DedupTruthPaper {
            title_words,
            subtitle_words,
            authors: (0..n_authors).map(|_| random_person(&mut rng)).collect(),
            venue: pick(&mut rng, &DEDUP_VENUES).to_owned(),
            date: random_date(&mut rng, 1995, 2023),
            abstract_text: make_abstract(&mut rng, topic, n_abstract),
            doi: rng
                .gen_bool(0.7)
                .then(|| format!("10.{}/synth.{:05}", rng.gen_range(1000..10000), i)),
            pdf_hash: rng.gen_bool(0.3).then(|| format!("{:016x}", rng.gen::<u64>())),
        });
    }

    let mut mentions = Vec::new();
    let mut truth = Vec::new();
    for (i, p) in papers.iter().enumerate() {
        let n_mentions = rng.gen_range(1..=4);
        let mut sources = DEDUP_SOURCES.to_vec();
        sources.shuffle(&mut rng);
        for source in sources.into_iter().take(n_mentions) {
            mentions.push(perturbed_mention(&mut rng, p, source, i));
            truth.push(i);
        }
    }
    DedupCorpus { papers, mentions, truth }
}

fn perturbed_mention<R: Rng>(rng: &mut R, p: &DedupTruthPaper, source: &str, index: usize) -> PaperMention {
    let mut title = p.title_words.join(" ");
    if !p.subtitle_words.is_empty() && !rng.gen_bool(0.35) {
        title = format!("{title}: {}", p.subtitle_words.join(" "));
    }
    match rng.gen_range(0..4) {
        0 => title = title.to_lowercase(),
        1 => title = title.to_uppercase(),
        _ => {}
    }
    if rng.gen_bool(0.3) {
        title = match rng.gen_range(0..3) {
            0 => format!("{title}."),
            1 => title.replace(':', " -"),
            _ => title.replacen(' ', ", ", 1),
        };
    }
    let initial = rng.gen_bool(0.4);
    let authors: Vec<String> = p
        .authors
        .iter()
        .map(|a| if initial { initialed(a) } else { a.clone() })
        .collect();
    let mut external_ids = ExternalIds::new();
    if let Some(doi) = &p.doi {
        if rng.gen_bool(0.8) {
            external_ids.insert(IdKind::Doi, doi.clone());
        }
    }
    let pdf_hash = p.pdf_hash.clone().filter(|_| rng.gen_bool(0.6));
    PaperMention {
        mention_id: format!("{source}:p{index:05}"),
        source: source.to_owned(),
        title,
        authors: author_mentions(&authors),
        venue_raw: if rng.gen_bool(0.85) { p.venue.clone() } else { String::new() },
        pub_date: Some(p.date),
        date_precision: None,
        abstract_text: if rng.gen_bool(0.3) { String::new() } else { p.abstract_text.clone() },
        external_ids,
        pdf_hash,
        bibliography: Vec::new(),
        body_sentences: Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Citation linking

#[derive(Debug, Clone)]
pub struct BibCase {
    pub entry: BibEntry,
    /// The paper the entry refers to, or `None` for an out-of-corpus decoy.
    pub target: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CitationCorpus {
    pub papers: Vec<Paper>,
    pub cases: Vec<BibCase>,
}

/// Keep the words covering the first `fraction` of the title's characters.
pub fn title_prefix(title: &str, fraction: f64) -> String {
    let target = (title.chars().count() as f64 * fraction).ceil() as usize;
    let mut out = String::new();
    for w in title.split_whitespace() {
        if out.chars().count() >= target {
            break;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Replace each letter with a random lowercase letter with probability `rate`.
pub fn char_noise<R: Rng>(rng: &mut R, text: &str, rate: f64) -> String {
    text.chars()
        .map(|c| {
            if c.is_alphabetic() && rng.gen_bool(rate) {
                rng.gen_range(b'a'..=b'z') as char
            } else {
                c
            }
        })
        .collect()
}

fn noisy_entry<R: Rng>(rng: &mut R, title: &str, authors: &[String], year: Option<i32>) -> BibEntry {
    let title = char_noise(rng, &title_prefix(title, 0.6), 0.1);
    let author_names: Vec<String> = authors.iter().map(|a| initialed(a)).collect();
    let raw = format!(
        "{}. {}. {}.",
        author_names.join(", "),
        title,
        year.map(|y| y.to_string()).unwrap_or_default()
    );
    BibEntry {
        raw,
        title,
        author_names,
        year,
        venue: None,
    }
}

/// `n_papers` canonical papers, `n_linked` noisy bibliography entries that
/// point at random papers, and `n_decoys` entries for papers not in the corpus.
pub fn citation_corpus(seed: u64, n_papers: usize, n_linked: usize, n_decoys: usize) -> CitationCorpus {
    let mut rng = rng(seed);
    let pools: Vec<&[&str]> = vec![&MEDICINE_WORDS, &CS_WORDS, &PHYSICS_WORDS, &BIOLOGY_WORDS, &ECONOMICS_WORDS];
    let make = |rng: &mut ChaCha8Rng, id: u64| {
        let topic = *pools.choose(rng).unwrap();
        let mut pool: Vec<&str> = topic.to_vec();
        pool.extend_from_slice(&GENERIC_WORDS);
        let n = rng.gen_range(6..=10);
        let title = make_title(rng, &pool, n, 1).join(" ");
        let authors: Vec<String> = (0..rng.gen_range(1..=4)).map(|_| random_person(rng)).collect();
        bare_paper(id, &title, "", &authors, Some(random_date(rng, 1990, 2023)))
    };
    let papers: Vec<Paper> = (1..=n_papers as u64).map(|id| make(&mut rng, id)).collect();
    let mut cases = Vec::with_capacity(n_linked + n_decoys);
    for _ in 0..n_linked {
        let p = &papers[rng.gen_range(0..papers.len())];
        let names: Vec<String> = p.authors.iter().map(|a| a.raw_name.clone()).collect();
        cases.push(BibCase {
            entry: noisy_entry(&mut rng, &p.title, &names, p.year()),
            target: Some(p.corpus_id),
        });
    }
    for _ in 0..n_decoys {
        let decoy = make(&mut rng, 0);
        let names: Vec<String> = decoy.authors.iter().map(|a| a.raw_name.clone()).collect();
        cases.push(BibCase {
            entry: noisy_entry(&mut rng, &decoy.title, &names, decoy.year()),
            target: None,
        });
    }
    CitationCorpus { papers, cases }
}

// ---------------------------------------------------------------------------
// Author disambiguation

#[derive(Debug, Clone)]
pub struct Identity {
    pub key: String,
    pub first: String,
    pub middle: Option<char>,
    pub last: String,
    pub inst_id: String,
    pub inst_name: String,
    pub topic: Vec<&'static str>,
    pub venues: Vec<String>,
    pub circle: Vec<usize>,
    pub first_year: i32,
}

impl Identity {
    fn render<R: Rng>(&self, rng: &mut R) -> String {
        match rng.gen_range(0..3) {
            0 => format!("{} {}", self.first, self.last),
            1 => format!("{}. {}", self.first.chars().next().unwrap(), self.last),
            _ => match self.middle {
                Some(m) => format!("{} {m}. {}", self.first, self.last),
                None => format!("{} {}", self.first, self.last),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuthorCorpus {
    pub identities: Vec<Identity>,
    pub papers: Vec<Paper>,
    pub inst_links: HashMap<MentionRef, String>,
    /// True identity key of every author slot.
    pub identity: HashMap<MentionRef, String>,
}

/// Papers written by `n_identities` people of whom about `homonym_rate`
/// share their first and last name with another person.
///
/// People work in groups of three to five that share an institution, a topic
/// vocabulary and two favourite venues; a paper is written by one group
/// member with some of their colleagues and occasionally an outsider.
/// Embeddings are assigned.
pub fn author_corpus(seed: u64, n_identities: usize, n_papers: usize, homonym_rate: f64) -> AuthorCorpus {
    let mut rng = rng(seed);
    let all_words: Vec<&'static str> = MEDICINE_WORDS
        .iter()
        .chain(&CS_WORDS)
        .chain(&PHYSICS_WORDS)
        .chain(&BIOLOGY_WORDS)
        .chain(&ECONOMICS_WORDS)
        .copied()
        .collect();
    let mut identities: Vec<Identity> = Vec::with_capacity(n_identities);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while identities.len() < n_identities {
        let size = rng.gen_range(3..=5).min(n_identities - identities.len());
        let (city, _) = *CITIES.choose(&mut rng).unwrap();
        let inst_id = format!("inst-{}", rng.gen_range(0..60));
        let mut topic: Vec<&'static str> = all_words.choose_multiple(&mut rng, 12).copied().collect();
        topic.sort_unstable();
        let venues: Vec<String> = (0..2).map(|_| format!("venue-{}", rng.gen_range(0..40))).collect();
        let first_year = rng.gen_range(1995..2015);
        let start = identities.len();
        for k in start..start + size {
            let (first, last) = if k > 0 && rng.gen_bool(homonym_rate) {
                let other = &identities[rng.gen_range(0..identities.len())];
                (other.first.clone(), other.last.clone())
            } else {
                (pick(&mut rng, &FIRST_NAMES).to_owned(), pick(&mut rng, &LAST_NAMES).to_owned())
            };
            identities.push(Identity {
                key: format!("person-{k:04}"),
                first,
                middle: rng.gen_bool(0.5).then(|| rng.gen_range(b'A'..=b'Z') as char),
                last,
                inst_id: inst_id.clone(),
                inst_name: format!("University of {city}"),
                topic: topic.clone(),
                venues: venues.clone(),
                circle: Vec::new(),
                first_year: first_year + rng.gen_range(-2..=2),
            });
        }
        groups.push((start..start + size).collect());
    }
    for g in &groups {
        for &k in g {
            identities[k].circle = g.iter().copied().filter(|c| *c != k).collect();
        }
    }

    let mut papers = Vec::with_capacity(n_papers);
    let mut inst_links = HashMap::new();
    let mut identity = HashMap::new();
    for n in 0..n_papers {
        let corpus_id = n as u64 + 1;
        let lead = rng.gen_range(0..n_identities);
        let lead_id = &identities[lead];
        let mut team = vec![lead];
        for c in &lead_id.circle {
            if rng.gen_bool(0.6) && !team.contains(c) {
                team.push(*c);
            }
        }
        if rng.gen_bool(0.15) {
            let stranger = rng.gen_range(0..n_identities);
            if !team.contains(&stranger) {
                team.push(stranger);
            }
        }
        team[1..].shuffle(&mut rng);
        let title = make_title(&mut rng, &lead_id.topic, 7, 0).join(" ");
        let abstract_text = make_abstract(&mut rng, &lead_id.topic, 40);
        let year = lead_id.first_year + rng.gen_range(0..8);
        let mut paper = bare_paper(corpus_id, &title, &abstract_text, &[], NaiveDate::from_ymd_opt(year, 6, 1));
        paper.venue_id = Some(lead_id.venues.choose(&mut rng).unwrap().clone());
        paper.embedding = Some(embed_document(&title, &abstract_text, DEFAULT_EMBEDDING_DIM));
        for (pos, who) in team.iter().enumerate() {
            let person = &identities[*who];
            let slot = (corpus_id, pos as u32);
            let with_affiliation = rng.gen_bool(0.75);
            paper.authors.push(AuthorMention {
                raw_name: person.render(&mut rng),
                position: pos as u32,
                affiliation_raw: if with_affiliation { person.inst_name.clone() } else { String::new() },
                email: rng
                    .gen_bool(0.2)
                    .then(|| format!("{}.{}@{}.edu", person.first, person.last, person.inst_id).to_lowercase()),
            });
            if with_affiliation {
                inst_links.insert(slot, person.inst_id.clone());
            }
            identity.insert(slot, person.key.clone());
        }
        papers.push(paper);
    }
    AuthorCorpus {
        identities,
        papers,
        inst_links,
        identity,
    }
}

/// Seed of the labeled corpus the bundled author scorer is trained on.
pub const AUTHOR_TRAINING_SEED: u64 = 20_240_101;

pub fn author_training_fixture() -> AuthorCorpus {
    author_corpus(AUTHOR_TRAINING_SEED, 300, 900, 0.2)
}

// ---------------------------------------------------------------------------
// Fields of study

#[derive(Debug, Clone)]
pub struct FosCorpus {
    pub train: Vec<Paper>,
    pub test: Vec<Paper>,
    pub venue_labels: VenueLabels,
    pub truth: HashMap<u64, BTreeSet<FieldLabel>>,
}

/// Two fields with disjoint vocabularies, `venues_per_field` venues each,
/// `papers_per_venue` papers per venue; `held_out` of the papers form the
/// test split.
pub fn fos_corpus(seed: u64, venues_per_field: usize, papers_per_venue: usize, held_out: f64) -> FosCorpus {
    let mut rng = rng(seed);
    let fields = [FieldLabel::Medicine, FieldLabel::ComputerScience];
    let mut venue_labels = VenueLabels::new();
    let mut all = Vec::new();
    let mut truth = HashMap::new();
    let mut id = 0u64;
    for field in fields {
        for v in 0..venues_per_field {
            let venue_id = format!("{}-{v}", field.as_str().to_lowercase().replace(' ', "-"));
            venue_labels.insert(venue_id.clone(), BTreeSet::from([field]));
            for _ in 0..papers_per_venue {
                id += 1;
                let title = make_title(&mut rng, field_words(field), 7, 1).join(" ");
                let abstract_text = make_abstract(&mut rng, field_words(field), 50);
                let mut p = bare_paper(id, &title, &abstract_text, &[], None);
                p.venue_id = Some(venue_id.clone());
                truth.insert(id, BTreeSet::from([field]));
                all.push(p);
            }
        }
    }
    all.shuffle(&mut rng);
    let n_test = (all.len() as f64 * held_out).round() as usize;
    let test = all.split_off(all.len() - n_test);
    FosCorpus {
        train: all,
        test,
        venue_labels,
        truth,
    }
}

// ---------------------------------------------------------------------------
// Recommendations

#[derive(Debug, Clone)]
pub struct RecommendCorpus {
    pub graph: Graph,
    /// Cluster (0 or 1) of every paper.
    pub cluster: BTreeMap<u64, u8>,
    pub now: NaiveDate,
}

/// `per_cluster` papers for each of two vocabularies, dated within the 150
/// days before `now` so that roughly 40% fall inside the recommendation window.
pub fn recommend_corpus(seed: u64, per_cluster: usize, now: NaiveDate) -> RecommendCorpus {
    let mut rng = rng(seed);
    let vocab: [&[&str]; 2] = [&CS_WORDS, &BIOLOGY_WORDS];
    let mut papers = Vec::new();
    let mut cluster = BTreeMap::new();
    let mut id = 0u64;
    for (c, words) in vocab.iter().enumerate() {
        for _ in 0..per_cluster {
            id += 1;
            let title = make_title(&mut rng, words, 6, 0).join(" ");
            let abstract_text = make_abstract(&mut rng, words, 40);
            let date = now - Duration::days(rng.gen_range(0..150));
            let mut p = bare_paper(id, &title, &abstract_text, &[], Some(date));
            p.embedding = Some(embed_document(&title, &abstract_text, DEFAULT_EMBEDDING_DIM));
            papers.push(p);
            cluster.insert(id, c as u8);
        }
    }
    let graph = build_graph(GraphParts {
        papers,
        ..Default::default()
    })
    .expect("generated graph is consistent");
    RecommendCorpus { graph, cluster, now }
}

/// A random small graph with authors and papers for peer-review checks.
///
/// Papers have one to four authors drawn from `n_authors` people; some
/// people may end up with no papers.
pub fn review_graph(seed: u64, n_authors: usize, n_papers: usize) -> Graph {
    let mut rng = rng(seed);
    let mut papers = Vec::new();
    let mut mentions: BTreeMap<u64, Vec<MentionRef>> = BTreeMap::new();
    for n in 0..n_papers {
        let corpus_id = n as u64 + 1;
        let k = rng.gen_range(1..=4.min(n_authors));
        let ids: Vec<u64> = rand::seq::index::sample(&mut rng, n_authors, k)
            .into_iter()
            .map(|i| i as u64 + 1)
            .collect();
        let words = if rng.gen_bool(0.5) { &CS_WORDS } else { &PHYSICS_WORDS };
        let title = make_title(&mut rng, words, 6, 0).join(" ");
        let abstract_text = make_abstract(&mut rng, words, 30);
        let names: Vec<String> = ids.iter().map(|i| format!("Person {i}")).collect();
        let mut p = bare_paper(corpus_id, &title, &abstract_text, &names, Some(random_date(&mut rng, 2000, 2020)));
        p.embedding = Some(embed_document(&title, &abstract_text, DEFAULT_EMBEDDING_DIM));
        for (pos, a) in ids.iter().enumerate() {
            mentions.entry(*a).or_default().push((corpus_id, pos as u32));
        }
        papers.push(p);
    }
    let authors = (1..=n_authors as u64)
        .map(|id| Author {
            author_id: id,
            canonical_name: format!("Person {id}"),
            mentions: mentions.remove(&id).unwrap_or_default(),
            affiliations: BTreeSet::new(),
        })
        .collect();
    build_graph(GraphParts {
        papers,
        authors,
        ..Default::default()
    })
    .expect("generated graph is consistent")
}

/// A random graph with citation edges, for store and snapshot checks.
pub fn citation_graph(seed: u64, n_papers: usize, n_edges: usize) -> Graph {
    let mut rng = rng(seed);
    let papers: Vec<Paper> = (1..=n_papers as u64)
        .map(|id| {
            let title = make_title(&mut rng, &GENERIC_WORDS, 5, 1).join(" ");
            let mut p = bare_paper(id, &title, "", &[], Some(random_date(&mut rng, 2000, 2020)));
            if rng.gen_bool(0.5) {
                p.external_ids.insert(IdKind::Doi, format!("10.5555/g{id}"));
            }
            p
        })
        .collect();
    let mut pairs = BTreeSet::new();
    while pairs.len() < n_edges.min(n_papers * n_papers.saturating_sub(1)) {
        let a = rng.gen_range(1..=n_papers as u64);
        let b = rng.gen_range(1..=n_papers as u64);
        if a != b {
            pairs.insert((a, b));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(citing, cited)| CitationEdge {
            citing,
            cited,
            contexts: Vec::new(),
            intent: Default::default(),
            is_influential: rng.gen_bool(0.3),
        })
        .collect();
    build_graph(GraphParts {
        papers,
        edges,
        ..Default::default()
    })
    .expect("generated graph is consistent")
}

// ---------------------------------------------------------------------------
// Institution registry

const INSTITUTION_PATTERNS: [&str; 11] = [
    "University of {city}",
    "{city} Institute of Technology",
    "{city} Medical Center",
    "{city} State University",
    "Technical University of {city}",
    "{city} College",
    "{last} Research Institute",
    "{last} Laboratory for {field}",
    "{last} Institute for {field}",
    "{city} School of {field}",
    "{city} University Hospital",
];

/// A registry of `n` distinct institutions with aliases.
pub fn institution_registry(seed: u64, n: usize) -> Vec<InstitutionRecord> {
    let mut rng = rng(seed);
    let mut names = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let fields = ["Physics", "Genomics", "Economics", "Computing", "Medicine", "Materials"];
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        assert!(attempts < 100 * n + 1000, "cannot draw {n} distinct institution names");
        let (city, country) = *CITIES.choose(&mut rng).unwrap();
        let pattern = pick(&mut rng, &INSTITUTION_PATTERNS);
        let name = pattern
            .replace("{city}", city)
            .replace("{last}", pick(&mut rng, &LAST_NAMES))
            .replace("{field}", pick(&mut rng, &fields));
        if !names.insert(name.clone()) {
            continue;
        }
        let acronym: String = name
            .split_whitespace()
            .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
            .filter_map(|w| w.chars().next())
            .collect();
        let mut aliases = BTreeSet::new();
        aliases.insert(acronym);
        if name.starts_with("University of ") {
            aliases.insert(format!("{city} University"));
        }
        out.push(InstitutionRecord {
            inst_id: format!("I{:04}", out.len() + 1),
            name,
            aliases,
            country: country.to_owned(),
            city: city.to_owned(),
        });
    }
    out
}
