//! Recent-paper recommendations from user annotations, and reviewer
//! conflict-of-interest and match scores for peer review.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::enrich::{fos_vectorize, FosVocab, VOCAB_CAP};
use crate::graphstore::{Graph, GraphPaper};
use crate::linear::{fit_hinge, to_sparse, HingeConfig, HingeSample, LinearModel, SparseVec, TrainError};
use crate::text::{char_ngrams, embed_document, normalize_text, DocVector, DEFAULT_EMBEDDING_DIM};

pub const WINDOW_DAYS: i64 = 60;
pub const CANDIDATES: usize = 500;
pub const MAX_K: usize = 100;
pub const RANDOM_NEGATIVE_WEIGHT: f64 = 0.1;
pub const MIN_RANDOM_NEGATIVES: usize = 20;
pub const RANDOM_NEGATIVES_PER_POSITIVE: usize = 5;
pub const REVIEWER_TOP_PAPERS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("reviewer {0} has no papers to score against")]
    NotScorable(u64),
    #[error("training: {0}")]
    Train(#[from] TrainError),
}

/// Embedding dimension used by the graph (the first stored embedding's).
pub fn graph_embedding_dim(graph: &Graph) -> usize {
    graph
        .papers()
        .find_map(|p| p.embedding.as_ref().map(DocVector::dim))
        .unwrap_or(DEFAULT_EMBEDDING_DIM)
}

fn embedding_of(p: &GraphPaper, dim: usize) -> DocVector {
    match &p.embedding {
        Some(e) => e.clone(),
        None => embed_document(&p.title, &p.abstract_text, dim),
    }
}

pub fn in_window(date: NaiveDate, now: NaiveDate) -> bool {
    date <= now && date >= now - Duration::days(WINDOW_DAYS)
}

/// Papers published in the 60 days up to and including `now`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecentIndex {
    pub now: NaiveDate,
    /// `(corpus_id, embedding)`, ascending corpus id.
    pub entries: Vec<(u64, DocVector)>,
}

impl RecentIndex {
    pub fn build(graph: &Graph, now: NaiveDate) -> Self {
        let dim = graph_embedding_dim(graph);
        let entries = graph
            .papers()
            .filter(|p| p.pub_date.is_some_and(|d| in_window(d, now)))
            .map(|p| (p.corpus_id, embedding_of(p, dim)))
            .collect();
        Self { now, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, corpus_id: u64) -> bool {
        self.entries.binary_search_by_key(&corpus_id, |e| e.0).is_ok()
    }
}

/// Character n-gram TF-IDF vocabulary over every paper in the graph.
pub fn graph_vocab(graph: &Graph, cap: usize) -> FosVocab {
    let docs: Vec<Vec<String>> = graph
        .papers()
        .map(|p| {
            let t = normalize_text(&format!("{} {}", p.title, p.abstract_text));
            if t.is_empty() {
                Vec::new()
            } else {
                char_ngrams(&t, 1, 5)
            }
        })
        .collect();
    FosVocab::build(&docs, cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserTrainingReport {
    pub positives: usize,
    pub negatives: usize,
    pub random_negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserModelPair {
    pub tfidf_model: LinearModel,
    pub embed_model: LinearModel,
    pub report: UserTrainingReport,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Recommendation {
    pub corpus_id: u64,
    pub score: f64,
}

/// Graph plus the derived structures needed to serve recommendations.
pub struct Recommender<'g> {
    pub graph: &'g Graph,
    pub vocab: FosVocab,
    pub dim: usize,
    pub hinge: HingeConfig,
}

impl<'g> Recommender<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self::with_vocab(graph, graph_vocab(graph, VOCAB_CAP))
    }

    pub fn with_vocab(graph: &'g Graph, vocab: FosVocab) -> Self {
        Self {
            graph,
            vocab,
            dim: graph_embedding_dim(graph),
            hinge: HingeConfig::default(),
        }
    }

    fn paper(&self, id: u64) -> Result<&GraphPaper, RecommendError> {
        self.graph
            .paper(id)
            .ok_or_else(|| RecommendError::NotFound(format!("CorpusId:{id}")))
    }

    fn tfidf(&self, p: &GraphPaper) -> SparseVec {
        fos_vectorize(&p.title, &p.abstract_text, &self.vocab)
    }

    fn validate(&self, positives: &[u64], negatives: &[u64]) -> Result<(), RecommendError> {
        if positives.is_empty() {
            return Err(RecommendError::BadRequest("at least one positive paper is required".into()));
        }
        let pos: BTreeSet<u64> = positives.iter().copied().collect();
        if let Some(x) = negatives.iter().find(|n| pos.contains(n)) {
            return Err(RecommendError::BadRequest(format!("CorpusId:{x} is both positive and negative")));
        }
        for id in positives.iter().chain(negatives) {
            self.paper(*id)?;
        }
        Ok(())
    }

    /// Seeded sample of unannotated papers used as low-weight negatives.
    pub fn random_negatives(&self, positives: &[u64], negatives: &[u64], seed: u64) -> Vec<u64> {
        let excluded: BTreeSet<u64> = positives.iter().chain(negatives).copied().collect();
        let pool: Vec<u64> = self
            .graph
            .papers()
            .map(|p| p.corpus_id)
            .filter(|id| !excluded.contains(id))
            .collect();
        let unique_positives = positives.iter().collect::<BTreeSet<_>>().len();
        let want = MIN_RANDOM_NEGATIVES.max(RANDOM_NEGATIVES_PER_POSITIVE * unique_positives);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pool.choose_multiple(&mut rng, want.min(pool.len())).copied().collect()
    }

    pub fn train_user_models(&self, positives: &[u64], negatives: &[u64], seed: u64) -> Result<UserModelPair, RecommendError> {
        self.validate(positives, negatives)?;
        let random = self.random_negatives(positives, negatives, seed);
        let labeled: Vec<(u64, bool, f64)> = positives
            .iter()
            .map(|id| (*id, true, 1.0))
            .chain(negatives.iter().map(|id| (*id, false, 1.0)))
            .chain(random.iter().map(|id| (*id, false, RANDOM_NEGATIVE_WEIGHT)))
            .collect();
        let mut tfidf_samples = Vec::with_capacity(labeled.len());
        let mut embed_samples = Vec::with_capacity(labeled.len());
        for (id, positive, weight) in &labeled {
            let p = self.paper(*id)?;
            tfidf_samples.push(HingeSample { x: self.tfidf(p), positive: *positive, weight: *weight });
            embed_samples.push(HingeSample {
                x: to_sparse(embedding_of(p, self.dim).values()),
                positive: *positive,
                weight: *weight,
            });
        }
        Ok(UserModelPair {
            tfidf_model: fit_hinge(&tfidf_samples, self.vocab.len().max(1), &self.hinge)?,
            embed_model: fit_hinge(&embed_samples, self.dim, &self.hinge)?,
            report: UserTrainingReport {
                positives: positives.len(),
                negatives: negatives.len(),
                random_negatives: random.len(),
            },
        })
    }

    /// Mean of the two model margins for one paper.
    pub fn score(&self, models: &UserModelPair, p: &GraphPaper) -> f64 {
        let a = models.tfidf_model.margin_sparse(&self.tfidf(p));
        let b = models.embed_model.margin_dense(embedding_of(p, self.dim).values());
        (a + b) / 2.0
    }

    /// Normalized mean of the positive papers' embeddings.
    pub fn centroid(&self, positives: &[u64]) -> Result<DocVector, RecommendError> {
        let mut sum = vec![0.0; self.dim];
        for id in positives {
            for (s, v) in sum.iter_mut().zip(embedding_of(self.paper(*id)?, self.dim).values()) {
                *s += v;
            }
        }
        let n = positives.len().max(1) as f64;
        let mut c = DocVector::from_values(sum.into_iter().map(|s| s / n).collect());
        c.normalize();
        Ok(c)
    }

    /// The `CANDIDATES` recent papers nearest the centroid, excluding annotated ones.
    pub fn candidates(&self, index: &RecentIndex, centroid: &DocVector, excluded: &BTreeSet<u64>) -> Vec<u64> {
        let mut near: Vec<(f64, u64)> = index
            .entries
            .iter()
            .filter(|(id, _)| !excluded.contains(id))
            .map(|(id, e)| (centroid.cosine(e), *id))
            .collect();
        near.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        near.into_iter().take(CANDIDATES).map(|(_, id)| id).collect()
    }

    pub fn recommend(
        &self,
        index: &RecentIndex,
        positives: &[u64],
        negatives: &[u64],
        k: usize,
        seed: u64,
    ) -> Result<Vec<Recommendation>, RecommendError> {
        if k == 0 || k > MAX_K {
            return Err(RecommendError::BadRequest(format!("limit must be in 1..={MAX_K}")));
        }
        self.validate(positives, negatives)?;
        if index.is_empty() {
            return Ok(Vec::new());
        }
        let excluded: BTreeSet<u64> = positives.iter().chain(negatives).copied().collect();
        let candidates = self.candidates(index, &self.centroid(positives)?, &excluded);
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let models = self.train_user_models(positives, negatives, seed)?;
        let mut scored: Vec<Recommendation> = candidates
            .into_iter()
            .map(|id| Recommendation {
                corpus_id: id,
                score: self.score(&models, self.graph.paper(id).expect("indexed paper exists")),
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.corpus_id.cmp(&b.corpus_id)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// 1 when the reviewer shares any paper with a submission author, else 0.
/// A reviewer who is a submission author counts as conflicted.
pub fn coi_score(reviewer: u64, submission_authors: &[u64], graph: &Graph) -> Result<u8, RecommendError> {
    let papers = graph
        .author_papers(reviewer)
        .ok_or_else(|| RecommendError::NotFound(format!("author {reviewer}")))?;
    let conflicted = papers.iter().any(|id| {
        graph
            .paper(*id)
            .is_some_and(|p| p.author_ids.iter().any(|a| submission_authors.contains(a)))
    });
    Ok(u8::from(conflicted))
}

/// Mean cosine distance from the submission to the reviewer's three
/// closest papers (all of them when fewer). Lower is a better match.
pub fn match_score(reviewer: u64, title: &str, abstract_text: &str, graph: &Graph) -> Result<f64, RecommendError> {
    let papers = graph
        .author_papers(reviewer)
        .ok_or_else(|| RecommendError::NotFound(format!("author {reviewer}")))?;
    if papers.is_empty() {
        return Err(RecommendError::NotScorable(reviewer));
    }
    let dim = graph_embedding_dim(graph);
    let submission = embed_document(title, abstract_text, dim);
    let mut distances: Vec<f64> = papers
        .iter()
        .filter_map(|id| graph.paper(*id))
        .map(|p| 1.0 - submission.cosine(&embedding_of(p, dim)))
        .collect();
    distances.sort_by(f64::total_cmp);
    let top = &distances[..distances.len().min(REVIEWER_TOP_PAPERS)];
    Ok(top.iter().sum::<f64>() / top.len() as f64)
}
