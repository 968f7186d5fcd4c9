//! Field-of-study classification, influential-citation flags and embeddings.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authors::MentionRef;
use crate::citelink::{CitationContext, CitationEdge};
use crate::dedup::Paper;
use crate::linear::{fit_hinge, HingeConfig, HingeSample, LinearModel, SparseVec, TrainError};
use crate::text::{char_ngrams, embed_document, normalize_text};

macro_rules! field_labels {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum FieldLabel {
            $(#[serde(rename = $name)] $variant,)*
            #[serde(rename = "n/a")]
            NotApplicable,
        }

        impl FieldLabel {
            /// Every real field, excluding `n/a`.
            pub const FIELDS: [FieldLabel; 23] = [$(FieldLabel::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(FieldLabel::$variant => $name,)*
                    FieldLabel::NotApplicable => "n/a",
                }
            }
        }
    };
}

field_labels! {
    Medicine => "Medicine",
    Biology => "Biology",
    Physics => "Physics",
    Engineering => "Engineering",
    ComputerScience => "Computer Science",
    Chemistry => "Chemistry",
    Education => "Education",
    MaterialsScience => "Materials Science",
    EnvironmentalScience => "Environmental Science",
    Economics => "Economics",
    Psychology => "Psychology",
    AgriculturalAndFoodSciences => "Agricultural and Food Sciences",
    Business => "Business",
    Mathematics => "Mathematics",
    History => "History",
    PoliticalScience => "Political Science",
    Art => "Art",
    Geology => "Geology",
    Sociology => "Sociology",
    Philosophy => "Philosophy",
    Law => "Law",
    Linguistics => "Linguistics",
    Geography => "Geography",
}

impl fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown field of study: {0:?}")]
pub struct UnknownField(pub String);

impl FromStr for FieldLabel {
    type Err = UnknownField;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("n/a") {
            return Ok(FieldLabel::NotApplicable);
        }
        FieldLabel::FIELDS
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownField(s.to_owned()))
    }
}

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need at least two trainable labels, found {0}")]
    TooFewLabels(usize),
    #[error("training {label}: {source}")]
    Train {
        label: FieldLabel,
        #[source]
        source: TrainError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn read(path: &Path) -> Result<String, EnrichError> {
    std::fs::read_to_string(path).map_err(|source| EnrichError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub type VenueLabels = BTreeMap<String, BTreeSet<FieldLabel>>;

/// Parse a venue-label TSV: `venue_id<TAB>Label,Label`. `#` starts a comment.
pub fn parse_venue_labels(tsv: &str) -> Result<VenueLabels, EnrichError> {
    let mut out = VenueLabels::new();
    for (i, line) in tsv.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| EnrichError::Parse { line: i + 1, message };
        let (venue, labels) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected venue_id<TAB>labels".into()))?;
        let set = out.entry(venue.trim().to_owned()).or_default();
        for l in labels.split(',').filter(|l| !l.trim().is_empty()) {
            let label: FieldLabel = l.parse().map_err(|e: UnknownField| parse_err(e.to_string()))?;
            if label != FieldLabel::NotApplicable {
                set.insert(label);
            }
        }
    }
    Ok(out)
}

pub fn load_venue_labels(path: &Path) -> Result<VenueLabels, EnrichError> {
    parse_venue_labels(&read(path)?)
}

pub const VOCAB_CAP: usize = 300_000;
pub const MIN_LABEL_EXAMPLES: usize = 5;

fn fos_ngrams(title: &str, abstract_text: &str) -> Vec<String> {
    let text = normalize_text(&format!("{title} {abstract_text}"));
    if text.is_empty() {
        return Vec::new();
    }
    char_ngrams(&text, 1, 5)
}

/// Character n-gram vocabulary with frozen IDF weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FosVocab {
    pub ngrams: Vec<String>,
    pub idf: Vec<f64>,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
}

impl FosVocab {
    /// Keep the `cap` n-grams with the highest document frequency (ties by
    /// n-gram order); IDF is `ln((1 + N) / (1 + df)) + 1`.
    pub fn build(docs: &[Vec<String>], cap: usize) -> Self {
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
            for g in uniq {
                *df.entry(g).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(cap);
        ranked.sort_by(|a, b| a.0.cmp(b.0));
        let n = docs.len() as f64;
        let mut vocab = Self {
            ngrams: ranked.iter().map(|(g, _)| g.to_string()).collect(),
            idf: ranked.iter().map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0).collect(),
            lookup: HashMap::new(),
        };
        vocab.reindex();
        vocab
    }

    fn reindex(&mut self) {
        self.lookup = self.ngrams.iter().enumerate().map(|(i, g)| (g.clone(), i as u32)).collect();
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn index(&self, ngram: &str) -> Option<u32> {
        self.lookup.get(ngram).copied()
    }

    /// TF-IDF vector of pre-extracted n-grams, L2-normalized.
    pub fn vectorize_ngrams(&self, ngrams: &[String]) -> SparseVec {
        let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
        for g in ngrams {
            if let Some(i) = self.index(g) {
                *tf.entry(i).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = tf.into_iter().map(|(i, c)| (i, c * self.idf[i as usize])).collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }
}

pub fn fos_vectorize(title: &str, abstract_text: &str, vocab: &FosVocab) -> SparseVec {
    vocab.vectorize_ngrams(&fos_ngrams(title, abstract_text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelClassifier {
    pub label: FieldLabel,
    pub model: LinearModel,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FosModel {
    pub vocab: FosVocab,
    pub classifiers: Vec<LabelClassifier>,
}

impl FosModel {
    pub fn load(path: &Path) -> Result<Self, EnrichError> {
        let mut model: FosModel = serde_json::from_str(&read(path)?)?;
        model.vocab.reindex();
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), EnrichError> {
        std::fs::write(path, serde_json::to_vec(self)?).map_err(|source| EnrichError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn labels(&self) -> Vec<FieldLabel> {
        self.classifiers.iter().map(|c| c.label).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FosTrainReport {
    pub training_papers: usize,
    pub vocab_size: usize,
    pub examples_per_label: BTreeMap<FieldLabel, usize>,
    pub excluded_labels: Vec<FieldLabel>,
    pub biases: BTreeMap<FieldLabel, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FosConfig {
    pub vocab_cap: usize,
    pub min_examples: usize,
    pub hinge: HingeConfig,
}

impl Default for FosConfig {
    fn default() -> Self {
        Self {
            vocab_cap: VOCAB_CAP,
            min_examples: MIN_LABEL_EXAMPLES,
            hinge: HingeConfig::default(),
        }
    }
}

/// Propagate venue labels to papers and fit one-vs-rest hinge classifiers.
///
/// Papers without a labeled venue are not used. Labels with fewer than
/// `min_examples` propagated papers are skipped and listed in the report.
pub fn train_fos(
    venue_labels: &VenueLabels,
    papers: &[Paper],
    config: &FosConfig,
) -> Result<(FosModel, FosTrainReport), EnrichError> {
    let mut docs = Vec::new();
    let mut doc_labels: Vec<&BTreeSet<FieldLabel>> = Vec::new();
    for p in papers {
        if let Some(labels) = p.venue_id.as_ref().and_then(|v| venue_labels.get(v)) {
            if !labels.is_empty() {
                docs.push(fos_ngrams(&p.title, &p.abstract_text));
                doc_labels.push(labels);
            }
        }
    }
    let mut report = FosTrainReport {
        training_papers: docs.len(),
        ..Default::default()
    };
    for labels in &doc_labels {
        for l in labels.iter() {
            *report.examples_per_label.entry(*l).or_default() += 1;
        }
    }
    let trainable: Vec<FieldLabel> = report
        .examples_per_label
        .iter()
        .filter(|(_, n)| **n >= config.min_examples)
        .map(|(l, _)| *l)
        .collect();
    report.excluded_labels = report
        .examples_per_label
        .keys()
        .filter(|l| !trainable.contains(l))
        .copied()
        .collect();
    for l in &report.excluded_labels {
        log::warn!("field {l}: fewer than {} labeled papers, not trained", config.min_examples);
    }
    if trainable.len() < 2 {
        return Err(EnrichError::TooFewLabels(trainable.len()));
    }

    let vocab = FosVocab::build(&docs, config.vocab_cap);
    report.vocab_size = vocab.len();
    let vectors: Vec<SparseVec> = docs.iter().map(|d| vocab.vectorize_ngrams(d)).collect();
    let mut classifiers = Vec::new();
    for label in trainable {
        // Balanced class weights: one-vs-rest sets are skewed toward negatives.
        let n_pos = doc_labels.iter().filter(|ls| ls.contains(&label)).count() as f64;
        let n = doc_labels.len() as f64;
        let (w_pos, w_neg) = (n / (2.0 * n_pos), n / (2.0 * (n - n_pos).max(1.0)));
        let samples: Vec<HingeSample> = vectors
            .iter()
            .zip(&doc_labels)
            .map(|(x, ls)| {
                let positive = ls.contains(&label);
                HingeSample {
                    x: x.clone(),
                    positive,
                    weight: if positive { w_pos } else { w_neg },
                }
            })
            .collect();
        let model = fit_hinge(&samples, vocab.len(), &config.hinge).map_err(|source| EnrichError::Train { label, source })?;
        report.biases.insert(label, model.bias);
        classifiers.push(LabelClassifier {
            label,
            model,
            threshold: 0.0,
        });
    }
    Ok((FosModel { vocab, classifiers }, report))
}

/// Labels whose margin exceeds their threshold, or `{n/a}` when none do.
pub fn classify_fos_vector(x: &[(u32, f64)], model: &FosModel) -> BTreeSet<FieldLabel> {
    let mut out: BTreeSet<FieldLabel> = model
        .classifiers
        .iter()
        .filter(|c| c.model.margin_sparse(x) > c.threshold)
        .map(|c| c.label)
        .collect();
    if out.is_empty() {
        out.insert(FieldLabel::NotApplicable);
    }
    out
}

pub fn classify_fos(paper: &Paper, model: &FosModel) -> BTreeSet<FieldLabel> {
    classify_fos_vector(&fos_vectorize(&paper.title, &paper.abstract_text, &model.vocab), model)
}

/// Compiled cue-phrase matcher for influential citations.
#[derive(Debug, Clone)]
pub struct CuePhrases {
    phrases: Vec<String>,
    pattern: Option<Regex>,
}

const BUNDLED_CUES: &str = include_str!("../data/influential_cues.txt");

impl CuePhrases {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Self {
        let phrases: Vec<String> = phrases
            .iter()
            .map(|p| p.as_ref().split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .collect();
        let pattern = if phrases.is_empty() {
            None
        } else {
            let alts: Vec<String> = phrases
                .iter()
                .map(|p| p.split(' ').map(regex::escape).collect::<Vec<_>>().join(r"\s+"))
                .collect();
            Some(Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|"))).expect("escaped cue phrases form a valid regex"))
        };
        Self { phrases, pattern }
    }

    /// One phrase per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        Self::new(&lines)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CUES)
    }

    pub fn load(path: &Path) -> Result<Self, EnrichError> {
        Ok(Self::parse(&read(path)?))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn matches(&self, sentence: &str) -> bool {
        self.pattern.as_ref().is_some_and(|p| p.is_match(sentence))
    }
}

fn figure_table_pattern() -> &'static Regex {
    static PATTERN: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)\b(?:table|figure|fig\.)\s*\d+").unwrap())
}

pub fn mentions_figure_or_table(sentence: &str) -> bool {
    figure_table_pattern().is_match(sentence)
}

pub const MIN_SOLO_CONTEXTS: usize = 3;

/// The influential-citation rule on its inputs alone.
pub fn is_influential(contexts: &[CitationContext], shares_author: bool, cues: &CuePhrases) -> bool {
    if shares_author {
        return false;
    }
    contexts.iter().filter(|c| c.is_solo()).count() >= MIN_SOLO_CONTEXTS
        || contexts.iter().any(|c| cues.matches(&c.text))
        || contexts.iter().any(|c| mentions_figure_or_table(&c.text))
}

fn author_ids(paper: &Paper, author_map: &BTreeMap<MentionRef, u64>) -> BTreeSet<u64> {
    paper
        .authors
        .iter()
        .filter_map(|a| author_map.get(&(paper.corpus_id, a.position)).copied())
        .collect()
}

pub fn classify_influential(
    edge: &CitationEdge,
    citing: &Paper,
    cited: &Paper,
    author_map: &BTreeMap<MentionRef, u64>,
    cues: &CuePhrases,
) -> bool {
    let a = author_ids(citing, author_map);
    let b = author_ids(cited, author_map);
    is_influential(&edge.contexts, !a.is_disjoint(&b), cues)
}

/// Set `is_influential` on every edge. `papers` must contain every endpoint.
pub fn mark_influential(
    edges: &mut [CitationEdge],
    papers: &[Paper],
    author_map: &BTreeMap<MentionRef, u64>,
    cues: &CuePhrases,
) {
    let by_id: HashMap<u64, BTreeSet<u64>> = papers.iter().map(|p| (p.corpus_id, author_ids(p, author_map))).collect();
    let empty = BTreeSet::new();
    edges.par_iter_mut().for_each(|e| {
        let a = by_id.get(&e.citing).unwrap_or(&empty);
        let b = by_id.get(&e.cited).unwrap_or(&empty);
        e.is_influential = is_influential(&e.contexts, !a.is_disjoint(b), cues);
    });
}

pub fn assign_embeddings(papers: &mut [Paper], dim: usize) {
    papers.par_iter_mut().for_each(|p| {
        p.embedding = Some(embed_document(&p.title, &p.abstract_text, dim));
    });
}

pub fn assign_fields_of_study(papers: &mut [Paper], model: &FosModel) {
    papers.par_iter_mut().for_each(|p| {
        p.fields_of_study = classify_fos(p, model);
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(text: &str, co_cited: u32) -> CitationContext {
        CitationContext {
            text: text.into(),
            co_cited,
        }
    }

    #[test]
    fn label_names_round_trip() {
        assert_eq!(FieldLabel::FIELDS.len(), 23);
        for l in FieldLabel::FIELDS.iter().chain([FieldLabel::NotApplicable].iter()) {
            assert_eq!(l.as_str().parse::<FieldLabel>().unwrap(), *l);
            let json = serde_json::to_string(l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
        }
        assert!("Astrology".parse::<FieldLabel>().is_err());
    }

    #[test]
    fn venue_label_tsv() {
        let labels = parse_venue_labels("# c\nv1\tMedicine,Biology\nv2\tComputer Science\n").unwrap();
        assert_eq!(labels["v1"].len(), 2);
        assert!(labels["v2"].contains(&FieldLabel::ComputerScience));
        assert!(parse_venue_labels("v1\tAstrology").is_err());
        assert!(parse_venue_labels("v1 Medicine").is_err());
    }

    #[test]
    fn vocab_cap_and_norms() {
        let docs = vec![fos_ngrams("graph neural networks", ""), fos_ngrams("protein folding", "")];
        let vocab = FosVocab::build(&docs, 40);
        assert_eq!(vocab.len(), 40);
        let v = fos_vectorize("graph neural", "", &vocab);
        let norm: f64 = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        assert!(fos_vectorize("", "", &vocab).is_empty());
        assert!(fos_vectorize("ŵŵŵ", "", &vocab).is_empty() || vocab.index("w").is_some());
        assert_eq!(fos_vectorize("graph", "x", &vocab), fos_vectorize("graph", "x", &vocab));
    }

    #[test]
    fn cue_matching_is_word_bounded() {
        let cues = CuePhrases::bundled();
        assert_eq!(cues.phrases().len(), 8);
        assert!(cues.matches("This work was Inspired  by [3]."));
        assert!(cues.matches("We extend their method."));
        assert!(!cues.matches("An extendable framework."));
        assert!(!cues.matches("Nothing to see."));
        assert!(mentions_figure_or_table("as in Fig. 3 of [2]"));
        assert!(mentions_figure_or_table("see table 12"));
        assert!(!mentions_figure_or_table("a table of results"));
    }

    #[test]
    fn influential_examples() {
        let cues = CuePhrases::bundled();
        let solo3 = vec![ctx("a", 0), ctx("b", 0), ctx("c", 0)];
        assert!(is_influential(&solo3, false, &cues));
        assert!(!is_influential(&solo3, true, &cues));
        assert!(is_influential(&[ctx("inspired by prior work", 2)], false, &cues));
        assert!(!is_influential(&[ctx("a", 0), ctx("b", 0)], false, &cues));
        assert!(!is_influential(&[ctx("a", 0), ctx("b", 0), ctx("c", 1)], false, &cues));
    }

    #[test]
    fn classify_empty_is_na() {
        let docs = vec![fos_ngrams("alpha", "")];
        let model = FosModel {
            vocab: FosVocab::build(&docs, 10),
            classifiers: vec![LabelClassifier {
                label: FieldLabel::Art,
                model: LinearModel {
                    weights: vec![0.0; 5],
                    bias: -0.1,
                },
                threshold: 0.0,
            }],
        };
        assert_eq!(classify_fos_vector(&[], &model), BTreeSet::from([FieldLabel::NotApplicable]));
    }
}
