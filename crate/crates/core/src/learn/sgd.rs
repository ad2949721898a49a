//! Multinomial logistic regression trained by plain SGD.
//!
//! Each step visits one training row, takes the gradient of its
//! cross-entropy plus `(l2/2)·‖θ‖²` (weights and biases alike) and moves
//! against it with rate `η_t = 1 / (l2 · (t0 + t))`, `t` counting steps
//! across epochs. `t0 = 1 / (l2 · η0)`, where `η0` is picked before training
//! by trying rates on a subsample: starting at 1, the rate is halved or
//! doubled while one pass at that rate keeps lowering the subsample
//! objective. Weight decay is applied through a shared scale factor so a
//! step costs O(L·D) regardless of the decay.
//!
//! Training stops after `epochs`, or earlier once the epoch-average
//! objective has failed to improve on the best seen by `tol` for
//! `n_iter_no_change` consecutive epochs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, LearnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub epochs: usize,
    pub l2: f64,
    pub tol: f64,
    pub n_iter_no_change: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { epochs: 50, l2: 1e-7, tol: 1e-6, n_iter_no_change: 5, seed: 0 }
    }
}

/// Rows used to pick the initial rate.
const PROBE_ROWS: usize = 1000;
const PROBE_FACTOR: f64 = 2.0;
const PROBE_STEPS: usize = 40;

/// Weights `L × D` (row-major) and biases `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub n_classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        LinearParams { n_classes, dim, weights: vec![0.0; n_classes * dim], biases: vec![0.0; n_classes] }
    }

    pub fn weight_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.dim..(c + 1) * self.dim]
    }

    pub fn logits(&self, x: &[f32]) -> Vec<f64> {
        (0..self.n_classes).map(|c| dot(self.weight_row(c), x) + self.biases[c]).collect()
    }

    pub fn predict_proba(&self, x: &[f32]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().chain(&self.biases).map(|w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|w| w.is_finite())
    }
}

fn dot(w: &[f64], x: &[f32]) -> f64 {
    w.iter().zip(x).map(|(&a, &b)| a * b as f64).sum()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// `-ln softmax(z)[y]`, computed without forming the probabilities.
fn cross_entropy(z: &[f64], y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    lse - z[y]
}

/// Mean cross-entropy over `rows` plus `(l2/2)·‖θ‖²`, with its gradient.
pub fn objective(
    params: &LinearParams,
    x: &FeatureMatrix,
    labels: &[usize],
    rows: &[usize],
    l2: f64,
) -> (f64, LinearParams) {
    let mut grad = LinearParams::zeros(params.n_classes, params.dim);
    let mut loss = 0.0;
    let n = rows.len().max(1) as f64;
    for &i in rows {
        let xi = x.row(i);
        let z = params.logits(xi);
        loss += cross_entropy(&z, labels[i]);
        let mut g = softmax(&z);
        g[labels[i]] -= 1.0;
        for (c, &gc) in g.iter().enumerate() {
            grad.biases[c] += gc / n;
            for (w, &v) in grad.weights[c * params.dim..(c + 1) * params.dim].iter_mut().zip(xi) {
                *w += gc * v as f64 / n;
            }
        }
    }
    for (g, w) in grad.weights.iter_mut().zip(&params.weights) {
        *g += l2 * w;
    }
    for (g, b) in grad.biases.iter_mut().zip(&params.biases) {
        *g += l2 * b;
    }
    (loss / n + 0.5 * l2 * params.squared_norm(), grad)
}

/// Parameters with weights held as `scale · v` so decay is O(1).
struct Scaled {
    v: Vec<f64>,
    scale: f64,
    biases: Vec<f64>,
    n_classes: usize,
    dim: usize,
}

impl Scaled {
    fn new(n_classes: usize, dim: usize) -> Self {
        Scaled { v: vec![0.0; n_classes * dim], scale: 1.0, biases: vec![0.0; n_classes], n_classes, dim }
    }

    fn logits(&self, x: &[f32]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| self.scale * dot(&self.v[c * self.dim..(c + 1) * self.dim], x) + self.biases[c])
            .collect()
    }

    /// One step on row `x` with label `y`; returns the row's loss before
    /// the step.
    fn step(&mut self, x: &[f32], y: usize, eta: f64, l2: f64) -> f64 {
        let z = self.logits(x);
        let loss = cross_entropy(&z, y);
        let mut g = softmax(&z);
        g[y] -= 1.0;
        let decay = 1.0 - eta * l2;
        self.scale *= decay;
        for (c, &gc) in g.iter().enumerate() {
            self.biases[c] = self.biases[c] * decay - eta * gc;
            if gc == 0.0 {
                continue;
            }
            let k = eta * gc / self.scale;
            for (w, &v) in self.v[c * self.dim..(c + 1) * self.dim].iter_mut().zip(x) {
                *w -= k * v as f64;
            }
        }
        if self.scale < 1e-9 {
            self.fold_scale();
        }
        loss
    }

    fn fold_scale(&mut self) {
        for w in &mut self.v {
            *w *= self.scale;
        }
        self.scale = 1.0;
    }

    fn into_params(mut self) -> LinearParams {
        self.fold_scale();
        LinearParams { n_classes: self.n_classes, dim: self.dim, weights: self.v, biases: self.biases }
    }

    fn squared_norm(&self) -> f64 {
        self.scale * self.scale * self.v.iter().map(|w| w * w).sum::<f64>()
            + self.biases.iter().map(|b| b * b).sum::<f64>()
    }
}

/// Objective on `rows` after one constant-rate pass from zero.
fn probe_cost(x: &FeatureMatrix, labels: &[usize], rows: &[usize], n_classes: usize, eta: f64, l2: f64) -> f64 {
    let mut s = Scaled::new(n_classes, x.cols());
    for &i in rows {
        s.step(x.row(i), labels[i], eta, l2);
    }
    let loss: f64 = rows.iter().map(|&i| cross_entropy(&s.logits(x.row(i)), labels[i])).sum();
    let cost = loss / rows.len() as f64 + 0.5 * l2 * s.squared_norm();
    if cost.is_finite() {
        cost
    } else {
        f64::INFINITY
    }
}

/// Initial rate: move from 1 by factors of two while the probe cost drops.
fn initial_rate(x: &FeatureMatrix, labels: &[usize], rows: &[usize], n_classes: usize, hyper: &Hyper) -> f64 {
    let mut sample = rows.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    rng.set_stream(1);
    sample.shuffle(&mut rng);
    sample.truncate(PROBE_ROWS);
    // keep the decay factor 1 - η·l2 well inside (0, 1]
    let ceiling = 0.5 / hyper.l2;
    let cost = |eta: f64| probe_cost(x, labels, &sample, n_classes, eta, hyper.l2);

    let mut lo = 1.0f64.min(ceiling);
    let mut lo_cost = cost(lo);
    let mut hi = (lo * PROBE_FACTOR).min(ceiling);
    let mut hi_cost = if hi > lo { cost(hi) } else { f64::INFINITY };
    let mut steps = 0;
    if lo_cost < hi_cost {
        while lo_cost < hi_cost && steps < PROBE_STEPS {
            hi = lo;
            hi_cost = lo_cost;
            lo = hi / PROBE_FACTOR;
            lo_cost = cost(lo);
            steps += 1;
        }
    } else if hi_cost < lo_cost {
        while hi_cost < lo_cost && steps < PROBE_STEPS && hi < ceiling {
            lo = hi;
            lo_cost = hi_cost;
            hi = (lo * PROBE_FACTOR).min(ceiling);
            hi_cost = cost(hi);
            steps += 1;
        }
    }
    let _ = (hi, hi_cost);
    lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub eta0: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Trains on `rows` of `x`. Single-threaded; the same inputs and seed give
/// bit-identical parameters.
pub fn fit(
    x: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    rows: &[usize],
    hyper: &Hyper,
) -> Result<(LinearParams, TrainSummary), LearnError> {
    if rows.is_empty() {
        return Err(LearnError::Domain("no training rows".into()));
    }
    if hyper.l2 <= 0.0 || !hyper.l2.is_finite() {
        return Err(LearnError::Config(format!("l2 must be positive, got {}", hyper.l2)));
    }
    if let Some(&i) = rows.iter().find(|&&i| i >= x.rows() || labels[i] >= n_classes) {
        return Err(LearnError::Domain(format!("training row {i} is out of range")));
    }

    let eta0 = initial_rate(x, labels, rows, n_classes, hyper);
    let t0 = 1.0 / (hyper.l2 * eta0);
    log::debug!("initial rate {eta0}, t0 {t0}");

    let mut s = Scaled::new(n_classes, x.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order = rows.to_vec();
    let mut t = 0u64;
    let mut best = f64::INFINITY;
    let mut no_improvement = 0;
    let mut epochs_run = 0;
    let mut last = f64::NAN;
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let eta = 1.0 / (hyper.l2 * (t0 + t as f64));
            sum += s.step(x.row(i), labels[i], eta, hyper.l2);
            t += 1;
        }
        let loss = sum / order.len() as f64 + 0.5 * hyper.l2 * s.squared_norm();
        if !loss.is_finite() {
            return Err(LearnError::Divergence { epoch });
        }
        log::debug!("epoch {epoch}: loss {loss:.6}");
        epochs_run = epoch;
        last = loss;
        if loss > best - hyper.tol {
            no_improvement += 1;
        } else {
            no_improvement = 0;
        }
        best = best.min(loss);
        if no_improvement >= hyper.n_iter_no_change {
            log::debug!("converged after {epoch} epochs");
            break;
        }
    }
    let params = s.into_params();
    if !params.is_finite() {
        return Err(LearnError::Divergence { epoch: epochs_run });
    }
    Ok((params, TrainSummary { eta0, epochs_run, final_loss: last }))
}
