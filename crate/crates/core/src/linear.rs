//! Deterministic full-batch trainers for linear models.
//!
//! Logistic regression backs the pairwise same-entity scorers; the weighted
//! hinge-loss trainer backs the field-of-study and recommendation SVMs.
//! Every gradient is a weighted mean over the batch, so duplicating the
//! training set leaves the trajectory unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sparse vector as `(index, value)` pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("training set needs both classes (positives: {positives}, negatives: {negatives})")]
    OneClass { positives: usize, negatives: usize },
    #[error("loss became non-finite at iteration {0}")]
    NonFinite(usize),
    #[error("feature vectors have inconsistent length")]
    Shape,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            iterations: 1500,
            learning_rate: 1.0,
            l2: 1e-3,
        }
    }
}

/// Fitted logistic model plus its final training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: f64,
}

/// Minimize mean log-loss + `l2/2 * |w|^2` by gradient descent from zero.
pub fn fit_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    config: &LogisticConfig,
) -> Result<LogisticFit, TrainError> {
    if features.is_empty() {
        return Err(TrainError::Empty);
    }
    if features.len() != labels.len() {
        return Err(TrainError::Shape);
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(TrainError::OneClass { positives, negatives });
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(TrainError::Shape);
    }
    let n = features.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut loss = f64::NAN;
    for it in 0..config.iterations {
        let mut grad = vec![0.0; dim];
        let mut grad_b = 0.0;
        let mut total = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let z = dot_dense(&w, x) + b;
            let p = sigmoid(z);
            let target = if y { 1.0 } else { 0.0 };
            // log(1 + e^-z) computed stably
            total += if y { softplus(-z) } else { softplus(z) };
            let err = p - target;
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        loss = total / n + 0.5 * config.l2 * w.iter().map(|v| v * v).sum::<f64>();
        if !loss.is_finite() {
            return Err(TrainError::NonFinite(it));
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= config.learning_rate * (g / n + config.l2 * *wi);
        }
        b -= config.learning_rate * grad_b / n;
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(TrainError::NonFinite(config.iterations));
    }
    Ok(LogisticFit { weights: w, bias: b, loss })
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

pub fn dot_dense(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

pub fn dot_sparse(w: &[f64], x: &[(u32, f64)]) -> f64 {
    x.iter()
        .map(|(i, v)| w.get(*i as usize).copied().unwrap_or(0.0) * v)
        .sum()
}

/// Convert a dense vector into sparse form, skipping exact zeros.
pub fn to_sparse(x: &[f64]) -> SparseVec {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i as u32, *v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for HingeConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            learning_rate: 0.5,
            l2: 1e-4,
        }
    }
}

/// A linear classifier `w·x + b` over a fixed-dimensional space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin_sparse(&self, x: &[(u32, f64)]) -> f64 {
        dot_sparse(&self.weights, x) + self.bias
    }

    pub fn margin_dense(&self, x: &[f64]) -> f64 {
        dot_dense(&self.weights, x) + self.bias
    }
}

/// One weighted training example with a ±1 label.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeSample {
    pub x: SparseVec,
    pub positive: bool,
    pub weight: f64,
}

/// Weighted soft-margin linear SVM by full-batch subgradient descent.
///
/// Objective: `l2/2 * |w|^2 + Σ weight_i * max(0, 1 - y_i (w·x_i + b)) / Σ weight_i`.
/// The step size decays as `learning_rate / sqrt(t + 1)`.
pub fn fit_hinge(
    samples: &[HingeSample],
    dim: usize,
    config: &HingeConfig,
) -> Result<LinearModel, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::Empty);
    }
    let positives = samples.iter().filter(|s| s.positive).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(TrainError::OneClass { positives, negatives });
    }
    if samples.iter().any(|s| s.x.iter().any(|(i, _)| *i as usize >= dim)) {
        return Err(TrainError::Shape);
    }
    let total_weight: f64 = samples.iter().map(|s| s.weight).sum();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    for t in 0..config.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for s in samples {
            let y = if s.positive { 1.0 } else { -1.0 };
            let margin = y * (dot_sparse(&w, &s.x) + b);
            if margin < 1.0 {
                for (i, v) in &s.x {
                    grad[*i as usize] -= s.weight * y * v;
                }
                grad_b -= s.weight * y;
            }
        }
        let step = config.learning_rate / ((t + 1) as f64).sqrt();
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * (g / total_weight + config.l2 * *wi);
        }
        b -= step * grad_b / total_weight;
        if !b.is_finite() {
            return Err(TrainError::NonFinite(t));
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(TrainError::NonFinite(config.iterations));
    }
    Ok(LinearModel { weights: w, bias: b })
}

/// Area under the ROC curve; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    // Mann-Whitney U with average ranks for ties.
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|l| **l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return 0.5;
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, l)| **l).map(|(r, _)| r).sum();
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}
