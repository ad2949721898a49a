use serde::{Deserialize, Serialize};

/// Probabilities below this are clipped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub top_1: f64,
    pub top_3: f64,
    pub top_5: f64,
    /// `exp` of the mean negative log-likelihood of the true class, in nats.
    pub perplexity: f64,
}

/// Zero-based rank of class `truth`: classes with higher probability come
/// first, and equal probabilities are ordered by column index.
pub fn rank_of(probs: &[f64], truth: usize) -> usize {
    let p = probs[truth];
    probs.iter().enumerate().filter(|&(c, &q)| q > p || (q == p && c < truth)).count()
}

pub fn top_n_accuracy(probs: &[Vec<f64>], truth: &[usize], n: usize) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let hits = probs.iter().zip(truth).filter(|(p, &t)| rank_of(p, t) < n).count();
    hits as f64 / probs.len() as f64
}

pub fn perplexity(probs: &[Vec<f64>], truth: &[usize]) -> f64 {
    if probs.is_empty() {
        return f64::NAN;
    }
    let nll: f64 = probs.iter().zip(truth).map(|(p, &t)| -p[t].max(PROB_FLOOR).ln()).sum();
    (nll / probs.len() as f64).exp()
}

pub fn metrics_from_probs(probs: &[Vec<f64>], truth: &[usize]) -> EvalMetrics {
    EvalMetrics {
        n: probs.len(),
        top_1: top_n_accuracy(probs, truth, 1),
        top_3: top_n_accuracy(probs, truth, 3),
        top_5: top_n_accuracy(probs, truth, 5),
        perplexity: perplexity(probs, truth),
    }
}
