//! Paper deduplication: title blocking, pairwise scoring, within-block clustering.
//!
//! Mentions are grouped into blocks by cheap title and identifier keys,
//! blocks that share a mention are merged, every pair inside a block is scored
//! by a [`PairScoreModel`], and pairs at or above the threshold are unioned
//! into clusters. Each cluster becomes one canonical [`Paper`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use petgraph::unionfind::UnionFind;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrich::FieldLabel;
use crate::ingest::{AuthorMention, BibEntry, BodySentence, ExternalIds, IdKind, PaperMention};
use crate::linear::{auc, fit_logistic, sigmoid, LogisticConfig, TrainError};
use crate::text::{edit_ratio, is_stopword, jaccard, normalize_text, DocVector, NormText, PersonName};

pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MIN_POSITIVES: usize = 50;

#[derive(Debug, Error)]
pub enum DedupError {
    #[error("only {found} positive training pairs; at least {required} required")]
    TooFewPositives { found: usize, required: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("model has {got} weights for {expected} features")]
    ModelShape { expected: usize, got: usize },
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Bibliography and body text carried over from one member mention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReferences {
    pub mention_id: String,
    pub bibliography: Vec<BibEntry>,
    pub body_sentences: Vec<BodySentence>,
}

/// Canonical deduplicated paper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paper {
    pub corpus_id: u64,
    pub member_mentions: Vec<String>,
    pub title: String,
    #[serde(default)]
    pub abstract_text: String,
    #[serde(default)]
    pub venue_raw: String,
    #[serde(default)]
    pub venue_id: Option<String>,
    #[serde(default)]
    pub pub_date: Option<NaiveDate>,
    pub authors: Vec<AuthorMention>,
    #[serde(default)]
    pub external_ids: ExternalIds,
    #[serde(default)]
    pub fields_of_study: BTreeSet<FieldLabel>,
    #[serde(default)]
    pub embedding: Option<DocVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<SourceReferences>,
}

impl Paper {
    pub fn year(&self) -> Option<i32> {
        use chrono::Datelike;
        self.pub_date.map(|d| d.year())
    }
}

/// Block keys of a mention: the first three non-stopword title tokens, the
/// acronym of all title tokens, and one `kind:value` key per external id.
pub fn block_keys(m: &PaperMention) -> BTreeSet<String> {
    let mut keys = BTreeSet::new();
    keys.extend(title_block_keys(&m.title));
    for (kind, value) in &m.external_ids {
        keys.insert(format!("{}:{}", kind.key_prefix(), value));
    }
    keys
}

/// The title-derived subset of [`block_keys`].
pub fn title_block_keys(title: &str) -> BTreeSet<String> {
    let norm = normalize_text(title);
    let mut keys = BTreeSet::new();
    if norm.is_empty() {
        return keys;
    }
    let content: Vec<&str> = norm.tokens().filter(|t| !is_stopword(t)).take(3).collect();
    if !content.is_empty() {
        keys.insert(content.join(" "));
    }
    let acronym: String = norm.tokens().filter_map(|t| t.chars().next()).collect();
    // Prefixed so an acronym can never collide with a one-word token key.
    keys.insert(format!("acr:{acronym}"));
    keys
}

pub const FEATURE_NAMES: [&str; 18] = [
    "title_edit_ratio",
    "title_token_jaccard",
    "abstract_token_jaccard",
    "abstract_both_present",
    "author_last_name_jaccard",
    "first_author_edit_ratio",
    "venue_edit_ratio",
    "year_diff_0",
    "year_diff_1",
    "year_diff_2_plus",
    "year_unknown",
    "doi_agreement",
    "arxiv_agreement",
    "pmid_agreement",
    "pmcid_agreement",
    "mag_agreement",
    "acl_agreement",
    "pdf_hash_agreement",
];

/// Per-mention values reused across every pair the mention takes part in.
struct MentionView<'a> {
    mention: &'a PaperMention,
    title: NormText,
    title_tokens: HashSet<String>,
    abstract_tokens: HashSet<String>,
    venue: NormText,
    last_names: HashSet<String>,
    first_author: Option<String>,
}

impl<'a> MentionView<'a> {
    fn new(mention: &'a PaperMention) -> Self {
        let names: Vec<PersonName> = mention.authors.iter().map(|a| PersonName::parse(&a.raw_name)).collect();
        let title = normalize_text(&mention.title);
        Self {
            mention,
            title_tokens: title.tokens().map(str::to_owned).collect(),
            title,
            abstract_tokens: normalize_text(&mention.abstract_text).tokens().map(str::to_owned).collect(),
            venue: normalize_text(&mention.venue_raw),
            last_names: names.iter().map(|n| n.last.clone()).filter(|l| !l.is_empty()).collect(),
            first_author: names.first().map(PersonName::full),
        }
    }
}

fn agreement<T: PartialEq>(a: Option<T>, b: Option<T>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) if x == y => 1.0,
        (Some(_), Some(_)) => -1.0,
        _ => 0.0,
    }
}

fn features_of(a: &MentionView<'_>, b: &MentionView<'_>) -> Vec<f64> {
    let mut f = Vec::with_capacity(FEATURE_NAMES.len());
    f.push(edit_ratio(a.title.as_str(), b.title.as_str()));
    f.push(jaccard(&a.title_tokens, &b.title_tokens));
    let both_abstracts = !a.abstract_tokens.is_empty() && !b.abstract_tokens.is_empty();
    f.push(if both_abstracts {
        jaccard(&a.abstract_tokens, &b.abstract_tokens)
    } else {
        0.0
    });
    f.push(if both_abstracts { 1.0 } else { 0.0 });
    f.push(if a.last_names.is_empty() || b.last_names.is_empty() {
        0.0
    } else {
        jaccard(&a.last_names, &b.last_names)
    });
    f.push(match (&a.first_author, &b.first_author) {
        (Some(x), Some(y)) => edit_ratio(x, y),
        _ => 0.0,
    });
    f.push(if a.venue.is_empty() || b.venue.is_empty() {
        0.0
    } else {
        edit_ratio(a.venue.as_str(), b.venue.as_str())
    });
    let mut year = [0.0; 4];
    match (a.mention.year(), b.mention.year()) {
        (Some(x), Some(y)) => year[((x - y).unsigned_abs() as usize).min(2)] = 1.0,
        _ => year[3] = 1.0,
    }
    f.extend(year);
    for kind in IdKind::ALL {
        f.push(agreement(a.mention.external_ids.get(&kind), b.mention.external_ids.get(&kind)));
    }
    f.push(agreement(a.mention.pdf_hash.as_ref(), b.mention.pdf_hash.as_ref()));
    f
}

/// Fixed-order pairwise similarity features (see [`FEATURE_NAMES`]).
pub fn pair_features(a: &PaperMention, b: &PaperMention) -> Vec<f64> {
    features_of(&MentionView::new(a), &MentionView::new(b))
}

/// Linear logistic same-entity scorer over a named feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScoreModel {
    pub features: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

impl PairScoreModel {
    pub fn score(&self, features: &[f64]) -> f64 {
        sigmoid(self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    pub fn load(path: &Path) -> Result<Self, DedupError> {
        let model: PairScoreModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), DedupError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn check(&self) -> Result<(), DedupError> {
        if self.weights.len() != self.features.len() {
            return Err(DedupError::ModelShape {
                expected: self.features.len(),
                got: self.weights.len(),
            });
        }
        Ok(())
    }
}

/// Diagnostics from [`fit_pair_model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub positives: usize,
    pub negatives: usize,
    pub loss: f64,
    pub auc: f64,
    pub accuracy: f64,
}

/// Fit a logistic pair scorer on labeled feature vectors.
pub fn fit_pair_model(
    feature_names: &[&str],
    examples: &[(Vec<f64>, bool)],
    threshold: f64,
    config: &LogisticConfig,
) -> Result<(PairScoreModel, TrainingReport), DedupError> {
    let (x, y): (Vec<Vec<f64>>, Vec<bool>) = examples.iter().cloned().unzip();
    if let Some(first) = x.first() {
        if first.len() != feature_names.len() {
            return Err(DedupError::ModelShape {
                expected: feature_names.len(),
                got: first.len(),
            });
        }
    }
    let fit = fit_logistic(&x, &y, config)?;
    let model = PairScoreModel {
        features: feature_names.iter().map(|s| s.to_string()).collect(),
        weights: fit.weights,
        bias: fit.bias,
        threshold,
    };
    let scores: Vec<f64> = x.iter().map(|f| model.score(f)).collect();
    let correct = scores.iter().zip(&y).filter(|(s, l)| (**s >= 0.5) == **l).count();
    let positives = y.iter().filter(|l| **l).count();
    let report = TrainingReport {
        positives,
        negatives: y.len() - positives,
        loss: fit.loss,
        auc: auc(&scores, &y),
        accuracy: correct as f64 / y.len() as f64,
    };
    Ok((model, report))
}

/// A training pair of mention indexes with its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabeledPair {
    pub a: usize,
    pub b: usize,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTrainingConfig {
    pub min_positives: usize,
    /// Majority class is down-sampled to at most this multiple of the minority.
    pub max_class_ratio: f64,
    pub seed: u64,
}

impl Default for PairTrainingConfig {
    fn default() -> Self {
        Self {
            min_positives: DEFAULT_MIN_POSITIVES,
            max_class_ratio: 3.0,
            seed: 42,
        }
    }
}

fn identity_signals(m: &PaperMention) -> [Option<&str>; 2] {
    [m.doi(), m.pdf_hash.as_deref()]
}

/// Build distant-supervision pairs from identifier agreement.
///
/// Positives: mentions from different sources sharing a DOI or PDF hash.
/// Negatives: mentions sharing a title block key where both carry a DOI or
/// PDF hash, at least one kind is present on both sides, and none match.
pub fn make_training_pairs(
    mentions: &[PaperMention],
    config: &PairTrainingConfig,
) -> Result<Vec<LabeledPair>, DedupError> {
    let mut positives: BTreeSet<(usize, usize)> = BTreeSet::new();
    for signal in 0..2 {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, m) in mentions.iter().enumerate() {
            if let Some(v) = identity_signals(m)[signal] {
                groups.entry(v).or_default().push(i);
            }
        }
        for members in groups.values() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    if mentions[i].source != mentions[j].source {
                        positives.insert((i, j));
                    }
                }
            }
        }
    }
    if positives.len() < config.min_positives {
        return Err(DedupError::TooFewPositives {
            found: positives.len(),
            required: config.min_positives,
        });
    }

    let mut blocks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in mentions.iter().enumerate() {
        if m.doi().is_none() && m.pdf_hash.is_none() {
            continue;
        }
        for key in title_block_keys(&m.title) {
            blocks.entry(key).or_default().push(i);
        }
    }
    let mut negatives: BTreeSet<(usize, usize)> = BTreeSet::new();
    for members in blocks.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                if is_negative_pair(&mentions[i], &mentions[j]) {
                    negatives.insert((i, j));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cap = |n_minority: usize| (n_minority as f64 * config.max_class_ratio).floor() as usize;
    let mut pos: Vec<(usize, usize)> = positives.into_iter().collect();
    let mut neg: Vec<(usize, usize)> = negatives.into_iter().collect();
    if neg.len() > cap(pos.len()) {
        neg = downsample(neg, cap(pos.len()), &mut rng);
    } else if pos.len() > cap(neg.len()) && !neg.is_empty() {
        pos = downsample(pos, cap(neg.len()), &mut rng);
    }
    let mut out: Vec<LabeledPair> = pos
        .into_iter()
        .map(|(a, b)| LabeledPair { a, b, positive: true })
        .chain(neg.into_iter().map(|(a, b)| LabeledPair { a, b, positive: false }))
        .collect();
    out.sort();
    Ok(out)
}

/// Both sides carry identity signals, at least one kind is comparable, none match.
pub fn is_negative_pair(a: &PaperMention, b: &PaperMention) -> bool {
    let mut comparable = false;
    for (x, y) in identity_signals(a).into_iter().zip(identity_signals(b)) {
        if let (Some(x), Some(y)) = (x, y) {
            if x == y {
                return false;
            }
            comparable = true;
        }
    }
    comparable
}

fn downsample(items: Vec<(usize, usize)>, keep: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut idx: Vec<usize> = sample(rng, items.len(), keep).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i]).collect()
}

/// Featurize labeled pairs for [`fit_pair_model`].
pub fn pair_examples(mentions: &[PaperMention], pairs: &[LabeledPair]) -> Vec<(Vec<f64>, bool)> {
    pairs
        .par_iter()
        .map(|p| (pair_features(&mentions[p.a], &mentions[p.b]), p.positive))
        .collect()
}

fn doi_conflict(a: &PaperMention, b: &PaperMention) -> bool {
    matches!((a.doi(), b.doi()), (Some(x), Some(y)) if x != y)
}

/// Group `0..n` by union-find root into sorted clusters ordered by first member.
fn components(uf: &UnionFind<usize>, n: usize) -> Vec<Vec<usize>> {
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Cluster one block: union every pair scoring at or above `threshold`,
/// except pairs whose DOIs conflict. Returns index clusters into `mentions`.
pub fn cluster_block(mentions: &[&PaperMention], model: &PairScoreModel, threshold: f64) -> Vec<Vec<usize>> {
    let views: Vec<MentionView<'_>> = mentions.iter().map(|m| MentionView::new(m)).collect();
    let n = mentions.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            // Already-connected pairs cannot change the partition.
            if doi_conflict(mentions[i], mentions[j]) || uf.equiv(i, j) {
                continue;
            }
            if model.score(&features_of(&views[i], &views[j])) >= threshold {
                uf.union(i, j);
            }
        }
    }
    components(&uf, n)
}

/// Output of [`dedupe_corpus`].
#[derive(Debug, Clone, Default)]
pub struct DedupOutput {
    pub papers: Vec<Paper>,
    pub mention_to_corpus: BTreeMap<String, u64>,
    /// Constraint violations found during canonicalization (e.g. DOI conflicts).
    pub violations: Vec<String>,
    pub blocks: usize,
    pub largest_block: usize,
}

/// Merged blocks of mention indexes: mentions sharing any block key end up
/// in the same block. Singleton blocks are included.
pub fn merged_blocks(mentions: &[PaperMention]) -> Vec<Vec<usize>> {
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, m) in mentions.iter().enumerate() {
        for key in block_keys(m) {
            by_key.entry(key).or_default().push(i);
        }
    }
    let mut uf = UnionFind::new(mentions.len());
    for members in by_key.values() {
        for w in members.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    components(&uf, mentions.len())
}

/// Deduplicate a corpus end to end.
///
/// Corpus ids are assigned 1.. in order of each cluster's smallest mention id.
pub fn dedupe_corpus(mentions: &[PaperMention], model: &PairScoreModel, threshold: f64) -> DedupOutput {
    let blocks = merged_blocks(mentions);
    let largest_block = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let clustered: Vec<Vec<Vec<usize>>> = blocks
        .par_iter()
        .map(|block| {
            if block.len() == 1 {
                return vec![block.clone()];
            }
            let members: Vec<&PaperMention> = block.iter().map(|&i| &mentions[i]).collect();
            cluster_block(&members, model, threshold)
                .into_iter()
                .map(|c| c.into_iter().map(|k| block[k]).collect())
                .collect()
        })
        .collect();
    let mut clusters: Vec<Vec<usize>> = clustered.into_iter().flatten().collect();
    for c in &mut clusters {
        c.sort_by(|a, b| mentions[*a].mention_id.cmp(&mentions[*b].mention_id));
    }
    clusters.sort_by(|a, b| mentions[a[0]].mention_id.cmp(&mentions[b[0]].mention_id));

    let mut out = DedupOutput {
        blocks: blocks.len(),
        largest_block,
        ..Default::default()
    };
    for (k, cluster) in clusters.iter().enumerate() {
        let corpus_id = k as u64 + 1;
        let members: Vec<&PaperMention> = cluster.iter().map(|&i| &mentions[i]).collect();
        let paper = canonicalize(corpus_id, &members, &mut out.violations);
        for m in &members {
            out.mention_to_corpus.insert(m.mention_id.clone(), corpus_id);
        }
        out.papers.push(paper);
    }
    enforce_id_uniqueness(&mut out.papers, &mentions_by_id(mentions), &mut out.violations);
    out
}

fn mentions_by_id(mentions: &[PaperMention]) -> HashMap<&str, &PaperMention> {
    mentions.iter().map(|m| (m.mention_id.as_str(), m)).collect()
}

/// Most frequent value, ties to the lexicographically smallest.
fn majority<'a>(values: impl Iterator<Item = &'a str>) -> Option<(&'a str, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let distinct = counts.len();
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(v, _)| (v, distinct))
}

fn longest<'a>(values: impl Iterator<Item = &'a str>) -> &'a str {
    // First encountered wins ties (members arrive sorted by mention id).
    values.fold("", |best, v| if v.chars().count() > best.chars().count() { v } else { best })
}

fn canonicalize(corpus_id: u64, members: &[&PaperMention], violations: &mut Vec<String>) -> Paper {
    let title = longest(members.iter().map(|m| m.title.as_str())).to_owned();
    let abstract_text = longest(members.iter().map(|m| m.abstract_text.as_str())).to_owned();
    let venue_raw = majority(members.iter().map(|m| m.venue_raw.as_str()).filter(|v| !v.is_empty()))
        .map(|(v, _)| v.to_owned())
        .unwrap_or_default();
    let pub_date = members.iter().filter_map(|m| m.pub_date).min();

    let mut external_ids = ExternalIds::new();
    for kind in IdKind::ALL {
        let values = members.iter().filter_map(|m| m.external_ids.get(&kind).map(String::as_str));
        if let Some((value, distinct)) = majority(values) {
            if distinct > 1 {
                violations.push(format!(
                    "CorpusId:{corpus_id}: {distinct} distinct {kind} values in one cluster; kept {value}"
                ));
            }
            external_ids.insert(kind, value.to_owned());
        }
    }

    // Author list from the member with the most authors, preferring longer
    // (less abbreviated) names; gaps in affiliation/email filled from others.
    let name_len = |m: &PaperMention| m.authors.iter().map(|a| a.raw_name.chars().count()).sum::<usize>();
    let primary = members
        .iter()
        .copied()
        .reduce(|best, m| {
            if (m.authors.len(), name_len(m)) > (best.authors.len(), name_len(best)) {
                m
            } else {
                best
            }
        })
        .expect("cluster has at least one member");
    let mut authors = primary.authors.clone();
    for a in &mut authors {
        let pos = a.position as usize;
        for m in members {
            let Some(other) = m.authors.get(pos) else { continue };
            if !crate::text::names_compatible(&a.raw_name, &other.raw_name) {
                continue;
            }
            if a.affiliation_raw.is_empty() && !other.affiliation_raw.is_empty() {
                a.affiliation_raw = other.affiliation_raw.clone();
            }
            if a.email.is_none() && other.email.is_some() {
                a.email = other.email.clone();
            }
        }
    }

    let references = members
        .iter()
        .filter(|m| !m.bibliography.is_empty())
        .map(|m| SourceReferences {
            mention_id: m.mention_id.clone(),
            bibliography: m.bibliography.clone(),
            body_sentences: m.body_sentences.clone(),
        })
        .collect();

    Paper {
        corpus_id,
        member_mentions: members.iter().map(|m| m.mention_id.clone()).collect(),
        title,
        abstract_text,
        venue_raw,
        venue_id: None,
        pub_date,
        authors,
        external_ids,
        fields_of_study: BTreeSet::new(),
        embedding: None,
        references,
    }
}

/// An external id may name only one paper. When clustering leaves the same
/// id on two papers, the paper with more supporting mentions keeps it.
fn enforce_id_uniqueness(
    papers: &mut [Paper],
    by_id: &HashMap<&str, &PaperMention>,
    violations: &mut Vec<String>,
) {
    let support = |p: &Paper, kind: IdKind, value: &str| {
        p.member_mentions
            .iter()
            .filter(|id| by_id.get(id.as_str()).and_then(|m| m.external_ids.get(&kind)).map(String::as_str) == Some(value))
            .count()
    };
    let mut owners: BTreeMap<(IdKind, String), usize> = BTreeMap::new();
    for (idx, p) in papers.iter().enumerate() {
        for (kind, value) in &p.external_ids {
            let key = (*kind, value.clone());
            match owners.get(&key) {
                None => {
                    owners.insert(key, idx);
                }
                Some(&other) => {
                    if support(p, *kind, value) > support(&papers[other], *kind, value) {
                        owners.insert(key, idx);
                    }
                }
            }
        }
    }
    for (idx, p) in papers.iter_mut().enumerate() {
        let corpus_id = p.corpus_id;
        p.external_ids.retain(|kind, value| {
            let keep = owners.get(&(*kind, value.clone())) == Some(&idx);
            if !keep {
                violations.push(format!("CorpusId:{corpus_id}: {kind} {value} also claimed by another paper; dropped"));
            }
            keep
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_record;

    fn mention(json: &str, source: &str) -> PaperMention {
        parse_record(json, source).unwrap().0
    }

    fn strict_model() -> PairScoreModel {
        // Title similarity dominates; DOI agreement strongly positive.
        let mut weights = vec![0.0; FEATURE_NAMES.len()];
        weights[0] = 10.0;
        weights[11] = 6.0;
        PairScoreModel {
            features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights,
            bias: -7.0,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    #[test]
    fn block_key_rules() {
        let m = mention(r#"{"title":"A Survey of Deep Learning"}"#, "s");
        let keys = block_keys(&m);
        assert!(keys.contains("survey deep learning"));
        assert!(keys.contains("acr:asodl"));
        let a = mention(r#"{"title":"Cats","externalIds":{"DOI":"10.1/x"}}"#, "s");
        let b = mention(r#"{"title":"Unrelated Dogs","externalIds":{"DOI":"10.1/X"}}"#, "t");
        assert!(block_keys(&a).contains("doi:10.1/x"));
        assert!(block_keys(&a).intersection(&block_keys(&b)).any(|k| k == "doi:10.1/x"));
        let c = mention(r#"{"title":"deep LEARNING, for: cats!"}"#, "s");
        let d = mention(r#"{"title":"Deep learning for cats"}"#, "s");
        assert_eq!(title_block_keys(&c.title), title_block_keys(&d.title));
        let e = mention(r#"{"title":"","externalIds":{"PMID":"12"}}"#, "s");
        assert_eq!(block_keys(&e), BTreeSet::from(["pmid:12".to_string()]));
    }

    #[test]
    fn pair_feature_examples() {
        let a = mention(
            r#"{"id":"1","title":"Graph Nets","abstract":"we study graphs","authors":[{"name":"Ann Lee"}],"venue":"ICML","date":"2020","externalIds":{"DOI":"10.1/a"}}"#,
            "s",
        );
        let f = pair_features(&a, &a.clone());
        assert_eq!(&f[0..7], &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(f[7], 1.0);
        assert_eq!(f[11], 1.0);
        let mut b = a.clone();
        b.external_ids.insert(IdKind::Doi, "10.1/b".into());
        assert_eq!(pair_features(&a, &b)[11], -1.0);
        assert_eq!(pair_features(&a, &b), pair_features(&b, &a));
        assert_eq!(pair_features(&a, &b).len(), FEATURE_NAMES.len());
    }

    #[test]
    fn cluster_block_examples() {
        let a = mention(r#"{"id":"a","title":"alpha beta gamma delta"}"#, "s");
        let b = mention(r#"{"id":"b","title":"alpha beta gamma delta epsilon"}"#, "s");
        let c = mention(r#"{"id":"c","title":"alpha beta gamma delta epsilon zeta"}"#, "s");
        let model = strict_model();
        // Chain a~b, b~c; a vs c is further apart but joins transitively.
        let clusters = cluster_block(&[&a, &b, &c], &model, 0.5);
        assert!(model.score(&pair_features(&a, &c)) < 0.5);
        assert_eq!(clusters, vec![vec![0, 1, 2]]);
        let clusters = cluster_block(&[&a, &b, &c], &model, 0.999_999);
        assert_eq!(clusters, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn doi_conflict_vetoes_direct_union() {
        let a = mention(r#"{"id":"a","title":"Same Title Here","externalIds":{"DOI":"10.1/a"}}"#, "s");
        let b = mention(r#"{"id":"b","title":"Same Title Here","externalIds":{"DOI":"10.1/b"}}"#, "s");
        let mut model = strict_model();
        model.weights[11] = 0.0;
        assert_eq!(cluster_block(&[&a, &b], &model, 0.5).len(), 2);
    }

    #[test]
    fn training_pairs_follow_id_rules() {
        let a = mention(r#"{"id":"1","title":"Shared Title Words Here","externalIds":{"DOI":"10.1/a"}}"#, "x");
        let b = mention(r#"{"id":"1","title":"Shared title words here!","externalIds":{"DOI":"10.1/a"}}"#, "y");
        let c = mention(r#"{"id":"2","title":"Shared Title Words Elsewhere","externalIds":{"DOI":"10.1/c"}}"#, "x");
        let corpus = vec![a, b, c];
        let cfg = PairTrainingConfig { min_positives: 1, ..Default::default() };
        let pairs = make_training_pairs(&corpus, &cfg).unwrap();
        assert!(pairs.contains(&LabeledPair { a: 0, b: 1, positive: true }));
        assert!(pairs.contains(&LabeledPair { a: 0, b: 2, positive: false }));
        assert!(pairs.contains(&LabeledPair { a: 1, b: 2, positive: false }));
    }

    #[test]
    fn single_source_has_no_positives() {
        let corpus: Vec<PaperMention> = (0..10)
            .map(|i| mention(&format!(r#"{{"id":"{i}","title":"T {i}","externalIds":{{"DOI":"10.1/{i}"}}}}"#), "only"))
            .collect();
        let err = make_training_pairs(&corpus, &PairTrainingConfig::default()).unwrap_err();
        assert!(matches!(err, DedupError::TooFewPositives { found: 0, .. }));
    }

    #[test]
    fn unique_titles_stay_separate_and_ids_are_ordered() {
        let corpus: Vec<PaperMention> = ["zeta one", "alpha two", "mid three"]
            .iter()
            .enumerate()
            .map(|(i, t)| mention(&format!(r#"{{"id":"{i}","title":"{t} paper"}}"#), "s"))
            .collect();
        let out = dedupe_corpus(&corpus, &strict_model(), 0.8);
        assert_eq!(out.papers.len(), 3);
        assert_eq!(out.mention_to_corpus["s:0"], 1);
        assert_eq!(out.mention_to_corpus["s:2"], 3);
    }

    #[test]
    fn canonical_selection() {
        let a = mention(
            r#"{"id":"1","title":"Deep Nets","venue":"ICML","date":"2021","authors":[{"name":"J. Smith"}],"externalIds":{"DOI":"10.1/a"}}"#,
            "x",
        );
        let b = mention(
            r#"{"id":"2","title":"Deep Nets: A Study","abstract":"long","venue":"ICML","date":"2020-05-01","authors":[{"name":"John Smith","affiliation":"MIT"}],"externalIds":{"DOI":"10.1/a","ArXiv":"2001.00001"}}"#,
            "y",
        );
        let c = mention(r#"{"id":"3","title":"Deep nets","venue":"Proc. ICML","externalIds":{"DOI":"10.1/b"}}"#, "z");
        let mut violations = Vec::new();
        let p = canonicalize(1, &[&a, &b, &c], &mut violations);
        assert_eq!(p.title, "Deep Nets: A Study");
        assert_eq!(p.abstract_text, "long");
        assert_eq!(p.venue_raw, "ICML");
        assert_eq!(p.pub_date, NaiveDate::from_ymd_opt(2020, 5, 1));
        assert_eq!(p.external_ids[&IdKind::Doi], "10.1/a");
        assert_eq!(p.external_ids[&IdKind::Arxiv], "2001.00001");
        assert_eq!(p.authors[0].raw_name, "John Smith");
        assert_eq!(violations.len(), 1);
    }
}
