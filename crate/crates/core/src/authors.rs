//! Author disambiguation: block author mentions by name, score pairs within a
//! block, and cluster each block by average-linkage agglomeration.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dedup::{fit_pair_model, DedupError, PairScoreModel, Paper, TrainingReport};
use crate::linear::LogisticConfig;
use crate::text::{edit_ratio, jaccard, name_compatibility, normalize_text, DocVector, NameCompat, PersonName};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

/// `(corpus_id, position)` of one author slot on one paper.
pub type MentionRef = (u64, u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub author_id: u64,
    pub canonical_name: String,
    pub mentions: Vec<MentionRef>,
    #[serde(default)]
    pub affiliations: BTreeSet<String>,
}

/// Block key: normalized last name plus first initial, or the full name for mononyms.
pub fn author_block_key(raw_name: &str) -> String {
    let name = PersonName::parse(raw_name);
    match name.first_initial() {
        Some(initial) => format!("{} {}", name.last, initial),
        None => name.last,
    }
}

pub const AUTHOR_FEATURE_NAMES: [&str; 12] = [
    "full_name_edit_ratio",
    "middle_name_agreement",
    "coauthor_jaccard",
    "venue_match",
    "affiliation_inst_match",
    "affiliation_token_jaccard",
    "year_gap_0_2",
    "year_gap_3_5",
    "year_gap_6_plus",
    "year_gap_unknown",
    "embedding_cosine",
    "email_match",
];

/// An author mention together with the paper-level context used for scoring.
#[derive(Debug, Clone)]
pub struct MentionContext {
    pub mention: MentionRef,
    pub raw_name: String,
    pub name: PersonName,
    pub coauthors: HashSet<String>,
    pub venue_id: Option<String>,
    pub inst_id: Option<String>,
    pub affiliation_tokens: HashSet<String>,
    pub year: Option<i32>,
    pub embedding: Option<DocVector>,
    pub email: Option<String>,
}

/// Build one context per author slot of every paper.
///
/// `inst_links` maps author slots to linked institution ids.
pub fn mention_contexts(papers: &[Paper], inst_links: &HashMap<MentionRef, String>) -> Vec<MentionContext> {
    let mut out = Vec::new();
    for p in papers {
        let names: Vec<PersonName> = p.authors.iter().map(|a| PersonName::parse(&a.raw_name)).collect();
        for (i, a) in p.authors.iter().enumerate() {
            let coauthors = names
                .iter()
                .enumerate()
                .filter(|(j, n)| *j != i && !n.last.is_empty())
                .map(|(_, n)| n.last.clone())
                .collect();
            let mention = (p.corpus_id, a.position);
            out.push(MentionContext {
                mention,
                raw_name: a.raw_name.clone(),
                name: names[i].clone(),
                coauthors,
                venue_id: p.venue_id.clone(),
                inst_id: inst_links.get(&mention).cloned(),
                affiliation_tokens: normalize_text(&a.affiliation_raw).tokens().map(str::to_owned).collect(),
                year: p.year(),
                embedding: p.embedding.clone(),
                email: a.email.as_ref().map(|e| e.trim().to_lowercase()),
            });
        }
    }
    out
}

fn flag(same: bool) -> f64 {
    if same {
        1.0
    } else {
        0.0
    }
}

fn both_equal<T: PartialEq>(a: &Option<T>, b: &Option<T>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x == y)
}

/// Symmetric pairwise features (see [`AUTHOR_FEATURE_NAMES`]).
pub fn author_pair_features(a: &MentionContext, b: &MentionContext) -> Vec<f64> {
    let mut f = Vec::with_capacity(AUTHOR_FEATURE_NAMES.len());
    f.push(edit_ratio(&a.name.full(), &b.name.full()));
    f.push(match (a.name.middle.first(), b.name.middle.first()) {
        (Some(x), Some(y)) if x.chars().next() == y.chars().next() => 1.0,
        (Some(_), Some(_)) => -1.0,
        _ => 0.0,
    });
    f.push(if a.coauthors.is_empty() || b.coauthors.is_empty() {
        0.0
    } else {
        jaccard(&a.coauthors, &b.coauthors)
    });
    f.push(flag(both_equal(&a.venue_id, &b.venue_id)));
    f.push(flag(both_equal(&a.inst_id, &b.inst_id)));
    f.push(if a.affiliation_tokens.is_empty() || b.affiliation_tokens.is_empty() {
        0.0
    } else {
        jaccard(&a.affiliation_tokens, &b.affiliation_tokens)
    });
    let mut gap = [0.0; 4];
    match (a.year, b.year) {
        (Some(x), Some(y)) => {
            let d = (x - y).unsigned_abs();
            gap[if d <= 2 { 0 } else if d <= 5 { 1 } else { 2 }] = 1.0;
        }
        _ => gap[3] = 1.0,
    }
    f.extend(gap);
    f.push(match (&a.embedding, &b.embedding) {
        (Some(x), Some(y)) => x.cosine(y),
        _ => 0.0,
    });
    f.push(flag(both_equal(&a.email, &b.email)));
    f
}

/// Scores are compared in fixed point so that linkage sums are exact and
/// merge order does not depend on floating-point association.
const SCORE_SCALE: f64 = 4_294_967_296.0;

pub fn quantize(score: f64) -> i64 {
    (score.clamp(0.0, 1.0) * SCORE_SCALE).round() as i64
}

/// Quantized pairwise scores and hard cannot-link flags for one block.
pub struct BlockScores {
    pub n: usize,
    pub scores: Vec<i64>,
    pub cannot_link: Vec<bool>,
}

impl BlockScores {
    pub fn compute(mentions: &[&MentionContext], model: &PairScoreModel) -> Self {
        let n = mentions.len();
        let mut scores = vec![0; n * n];
        let mut cannot_link = vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let s = quantize(model.score(&author_pair_features(mentions[i], mentions[j])));
                let veto = name_compatibility(&mentions[i].name, &mentions[j].name) == NameCompat::Incompatible;
                for (x, y) in [(i, j), (j, i)] {
                    scores[x * n + y] = s;
                    cannot_link[x * n + y] = veto;
                }
            }
        }
        Self { n, scores, cannot_link }
    }

    pub fn score(&self, i: usize, j: usize) -> i64 {
        self.scores[i * self.n + j]
    }

    pub fn vetoed(&self, i: usize, j: usize) -> bool {
        self.cannot_link[i * self.n + j]
    }
}

/// Average-linkage agglomerative clustering over precomputed block scores.
///
/// Repeatedly merges the pair of clusters with the highest mean cross-pair
/// score, skipping pairs with any incompatible cross pair, until the best
/// mean falls below `threshold`. Ties go to the lexicographically smallest
/// pair of cluster minima.
pub fn agglomerate(block: &BlockScores, threshold: f64) -> Vec<Vec<usize>> {
    let n = block.n;
    let t = quantize(threshold) as i128;
    // Cluster k is identified by its smallest member; `alive[k]` marks live ids.
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut alive = vec![true; n];
    let mut sum: Vec<i128> = block.scores.iter().map(|&s| s as i128).collect();
    let mut veto = block.cannot_link.clone();
    loop {
        let mut best: Option<(usize, usize, i128, i128)> = None;
        for a in (0..n).filter(|&a| alive[a]) {
            for b in (a + 1..n).filter(|&b| alive[b]) {
                if veto[a * n + b] {
                    continue;
                }
                let s = sum[a * n + b];
                let size = (members[a].len() * members[b].len()) as i128;
                let better = match best {
                    None => true,
                    // s/size > bs/bsize
                    Some((_, _, bs, bsize)) => s * bsize > bs * size,
                };
                if better {
                    best = Some((a, b, s, size));
                }
            }
        }
        let Some((a, b, s, size)) = best else { break };
        if s < t * size {
            break;
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        alive[b] = false;
        for c in (0..n).filter(|&c| alive[c] && c != a) {
            let merged = sum[a * n + c] + sum[b * n + c];
            let v = veto[a * n + c] || veto[b * n + c];
            sum[a * n + c] = merged;
            sum[c * n + a] = merged;
            veto[a * n + c] = v;
            veto[c * n + a] = v;
        }
    }
    let mut out: Vec<Vec<usize>> = members
        .into_iter()
        .zip(alive)
        .filter(|(_, live)| *live)
        .map(|(mut m, _)| {
            m.sort_unstable();
            m
        })
        .collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Cluster one block of mentions (indexes into `mentions`).
pub fn cluster_author_block(mentions: &[&MentionContext], model: &PairScoreModel, threshold: f64) -> Vec<Vec<usize>> {
    if mentions.len() == 1 {
        return vec![vec![0]];
    }
    agglomerate(&BlockScores::compute(mentions, model), threshold)
}

/// Output of [`disambiguate_authors`].
#[derive(Debug, Clone, Default)]
pub struct AuthorOutput {
    pub authors: Vec<Author>,
    pub mention_to_author: BTreeMap<MentionRef, u64>,
    pub blocks: usize,
    pub largest_block: usize,
}

/// Group mention indexes by block key, blocks in key order.
pub fn author_blocks(contexts: &[MentionContext]) -> Vec<Vec<usize>> {
    let mut blocks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, c) in contexts.iter().enumerate() {
        blocks.entry(author_block_key(&c.raw_name)).or_default().push(i);
    }
    blocks.into_values().collect()
}

/// Disambiguate every author mention of every paper.
///
/// Author ids are assigned 1.. in order of each cluster's smallest
/// `(corpus_id, position)`.
pub fn disambiguate_authors(
    papers: &[Paper],
    inst_links: &HashMap<MentionRef, String>,
    model: &PairScoreModel,
    threshold: f64,
) -> AuthorOutput {
    let contexts = mention_contexts(papers, inst_links);
    let blocks = author_blocks(&contexts);
    let largest_block = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let mut clusters: Vec<Vec<MentionRef>> = blocks
        .par_iter()
        .map(|block| {
            let members: Vec<&MentionContext> = block.iter().map(|&i| &contexts[i]).collect();
            cluster_author_block(&members, model, threshold)
                .into_iter()
                .map(|c| {
                    let mut refs: Vec<MentionRef> = c.into_iter().map(|k| members[k].mention).collect();
                    refs.sort_unstable();
                    refs
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    clusters.sort_by_key(|c| c[0]);

    let by_ref: HashMap<MentionRef, &MentionContext> = contexts.iter().map(|c| (c.mention, c)).collect();
    let mut out = AuthorOutput {
        blocks: blocks.len(),
        largest_block,
        ..Default::default()
    };
    for (k, refs) in clusters.into_iter().enumerate() {
        let author_id = k as u64 + 1;
        let mut canonical_name = String::new();
        let mut affiliations = BTreeSet::new();
        for r in &refs {
            let c = by_ref[r];
            let (len, cur) = (c.raw_name.chars().count(), canonical_name.chars().count());
            if len > cur || (len == cur && c.raw_name < canonical_name) {
                canonical_name = c.raw_name.clone();
            }
            if let Some(inst) = &c.inst_id {
                affiliations.insert(inst.clone());
            }
            out.mention_to_author.insert(*r, author_id);
        }
        out.authors.push(Author {
            author_id,
            canonical_name,
            mentions: refs,
            affiliations,
        });
    }
    out
}

/// Labeled within-block pairs for training an author scorer.
///
/// `identity` gives the true person behind each author slot; slots without a
/// label are skipped.
pub fn author_pair_examples(contexts: &[MentionContext], identity: &HashMap<MentionRef, String>) -> Vec<(Vec<f64>, bool)> {
    let mut out = Vec::new();
    for block in author_blocks(contexts) {
        for (x, &i) in block.iter().enumerate() {
            for &j in &block[x + 1..] {
                let (Some(a), Some(b)) = (identity.get(&contexts[i].mention), identity.get(&contexts[j].mention)) else {
                    continue;
                };
                out.push((author_pair_features(&contexts[i], &contexts[j]), a == b));
            }
        }
    }
    out
}

pub fn train_author_model(
    contexts: &[MentionContext],
    identity: &HashMap<MentionRef, String>,
    threshold: f64,
) -> Result<(PairScoreModel, TrainingReport), DedupError> {
    let examples = author_pair_examples(contexts, identity);
    fit_pair_model(&AUTHOR_FEATURE_NAMES, &examples, threshold, &LogisticConfig::default())
}

const BUNDLED_MODEL: &str = include_str!("../data/author_model.json");

/// The author scorer shipped with the crate, trained on the synthetic
/// labeled fixture (see `synth::author_training_fixture`).
pub fn bundled_author_model() -> PairScoreModel {
    serde_json::from_str(BUNDLED_MODEL).expect("bundled author model is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(id: u64, name: &str) -> MentionContext {
        MentionContext {
            mention: (id, 0),
            raw_name: name.into(),
            name: PersonName::parse(name),
            coauthors: HashSet::new(),
            venue_id: None,
            inst_id: None,
            affiliation_tokens: HashSet::new(),
            year: None,
            embedding: None,
            email: None,
        }
    }

    fn name_only_model() -> PairScoreModel {
        let mut weights = vec![0.0; AUTHOR_FEATURE_NAMES.len()];
        weights[0] = 12.0;
        PairScoreModel {
            features: AUTHOR_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            weights,
            bias: -6.0,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    #[test]
    fn block_keys() {
        assert_eq!(author_block_key("John A. Smith"), "smith j");
        assert_eq!(author_block_key("Smith, J."), "smith j");
        assert_eq!(author_block_key("Plato"), "plato");
    }

    #[test]
    fn features_examples() {
        let mut a = ctx(1, "Ann Lee");
        let mut b = ctx(2, "Ann Lee");
        a.coauthors = ["kim", "park"].iter().map(|s| s.to_string()).collect();
        b.coauthors = ["kim", "park", "cho"].iter().map(|s| s.to_string()).collect();
        a.venue_id = Some("v".into());
        b.venue_id = Some("v".into());
        a.email = Some("ann@x.org".into());
        b.email = Some("ann@x.org".into());
        let f = author_pair_features(&a, &b);
        assert!(f[2] > 0.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[11], 1.0);
        assert_eq!(f, author_pair_features(&b, &a));
    }

    #[test]
    fn singleton_and_veto() {
        let model = name_only_model();
        let a = ctx(1, "John Smith");
        assert_eq!(cluster_author_block(&[&a], &model, 0.75), vec![vec![0]]);
        let b = ctx(2, "Jane Smith");
        assert_eq!(author_block_key("Jane Smith"), author_block_key("John Smith"));
        // Vetoed even at a threshold every score clears.
        assert_eq!(cluster_author_block(&[&a, &b], &model, 0.0), vec![vec![0], vec![1]]);
    }

    #[test]
    fn veto_blocks_merge_through_initials() {
        // "J. Smith" is compatible with both, but the full names conflict.
        let model = name_only_model();
        let (a, b, c) = (ctx(1, "John Smith"), ctx(2, "J. Smith"), ctx(3, "Jane Smith"));
        let clusters = cluster_author_block(&[&a, &b, &c], &model, 0.0);
        assert_eq!(clusters.len(), 2);
        for cl in &clusters {
            assert!(!(cl.contains(&0) && cl.contains(&2)));
        }
    }

    #[test]
    fn unique_names_give_one_author_each() {
        use crate::ingest::AuthorMention;
        let mk = |id: u64, names: &[&str]| Paper {
            corpus_id: id,
            member_mentions: vec![],
            title: format!("p{id}"),
            abstract_text: String::new(),
            venue_raw: String::new(),
            venue_id: None,
            pub_date: None,
            authors: names
                .iter()
                .enumerate()
                .map(|(i, n)| AuthorMention { raw_name: n.to_string(), position: i as u32, affiliation_raw: String::new(), email: None })
                .collect(),
            external_ids: Default::default(),
            fields_of_study: Default::default(),
            embedding: None,
            references: vec![],
        };
        let papers = vec![mk(1, &["Ann Lee", "Bo Chen"]), mk(2, &["Cy Park"])];
        let out = disambiguate_authors(&papers, &HashMap::new(), &bundled_author_model(), DEFAULT_THRESHOLD);
        assert_eq!(out.authors.len(), 3);
        assert_eq!(out.mention_to_author[&(1, 0)], 1);
        assert_eq!(out.mention_to_author[&(2, 0)], 3);
        assert_eq!(out.mention_to_author.len(), 3);
    }
}
