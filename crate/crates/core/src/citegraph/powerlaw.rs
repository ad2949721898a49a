//! Discrete power-law fitting.
//!
//! For each candidate lower cutoff `x_min` (every distinct positive value
//! that leaves at least two distinct values in the tail) the exponent is the
//! maximum-likelihood estimate under
//! `p(x) = x^-alpha / zeta(alpha, x_min)` for `x >= x_min`, and the
//! candidate is scored by the Kolmogorov-Smirnov distance between the
//! empirical and fitted tail CDFs. The lowest KS wins; ties go to the
//! smaller `x_min`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Exec};

/// Search interval for the exponent.
pub const ALPHA_MIN: f64 = 1.01;
pub const ALPHA_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: u64,
    pub ks: f64,
    pub n_tail: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("no positive samples")]
    Empty,
    #[error("all positive samples are equal")]
    AllEqual,
    #[error("no cutoff leaves a tail with at least two distinct values")]
    DegenerateTail,
}

// B_2k / (2k)! for k = 1..=7.
const BERNOULLI_OVER_FACTORIAL: [f64; 7] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
];

/// Hurwitz zeta `sum_{k>=0} (q + k)^-s` for `s > 1`, `q > 0`.
///
/// Direct summation until the shifted argument reaches 10, then an
/// Euler-Maclaurin tail with seven Bernoulli corrections.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    let mut sum = 0.0;
    let mut a = q;
    while a < 10.0 {
        sum += a.powf(-s);
        a += 1.0;
    }
    let a_s = a.powf(-s);
    let mut tail = a * a_s / (s - 1.0) + 0.5 * a_s;
    // rising factorial s (s+1) ... (s+2k-2) times a^(-s-2k+1)
    let mut rising = s;
    let mut power = a_s / a;
    let inv_a2 = 1.0 / (a * a);
    for (k, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let m = 2.0 * k as f64;
            rising *= (s + m - 1.0) * (s + m);
            power *= inv_a2;
        }
        tail += coef * rising * power;
    }
    sum + tail
}

/// Log-likelihood of a discrete power-law tail with `n` samples whose
/// logs sum to `sum_ln`.
fn log_likelihood(alpha: f64, x_min: f64, n: f64, sum_ln: f64) -> f64 {
    -n * hurwitz_zeta(alpha, x_min).ln() - alpha * sum_ln
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Maximum-likelihood exponent for a fixed cutoff.
pub fn mle_alpha(tail: &[u64], x_min: u64) -> f64 {
    let sum_ln: f64 = tail.iter().map(|&x| (x as f64).ln()).sum();
    let n = tail.len() as f64;
    golden_max(|a| log_likelihood(a, x_min as f64, n, sum_ln), ALPHA_MIN, ALPHA_MAX, 1e-9)
}

/// KS distance between a tail (given as sorted distinct values with counts)
/// and the fitted discrete CDF. Checks both sides of every jump.
fn ks_distance(values: &[u64], counts: &[u64], n_tail: u64, alpha: f64) -> f64 {
    let x_min = values[0] as f64;
    let z_min = hurwitz_zeta(alpha, x_min);
    let cdf = |x: u64| 1.0 - hurwitz_zeta(alpha, x as f64 + 1.0) / z_min;
    let mut cum = 0u64;
    let mut d: f64 = 0.0;
    for (i, (&v, &c)) in values.iter().zip(counts).enumerate() {
        let before = cum as f64 / n_tail as f64;
        let model_before = if i == 0 { 0.0 } else { cdf(v - 1) };
        d = d.max((before - model_before).abs());
        cum += c;
        d = d.max((cum as f64 / n_tail as f64 - cdf(v)).abs());
    }
    d
}

pub fn fit_power_law(samples: &[u64]) -> Result<PowerLawFit, FitError> {
    fit_power_law_with(samples, Exec::default())
}

pub fn fit_power_law_with(samples: &[u64], exec: Exec) -> Result<PowerLawFit, FitError> {
    let mut data: Vec<u64> = samples.iter().copied().filter(|&x| x > 0).collect();
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    data.sort_unstable();

    let mut values: Vec<u64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    for (i, &x) in data.iter().enumerate() {
        if values.last() != Some(&x) {
            values.push(x);
            counts.push(0);
            starts.push(i);
        }
        *counts.last_mut().unwrap() += 1;
    }
    if values.len() < 2 {
        return Err(FitError::AllEqual);
    }

    // suffix sums of ln x, indexed by position in `data`
    let mut suffix_ln = vec![0.0f64; data.len() + 1];
    for i in (0..data.len()).rev() {
        suffix_ln[i] = suffix_ln[i + 1] + (data[i] as f64).ln();
    }

    let candidates = values.len() - 1;
    let fits = par::map_range(exec, candidates, |k| {
        let x_min = values[k];
        let start = starts[k];
        let n_tail = data.len() - start;
        let n = n_tail as f64;
        let sum_ln = suffix_ln[start];
        let alpha = golden_max(|a| log_likelihood(a, x_min as f64, n, sum_ln), ALPHA_MIN, ALPHA_MAX, 1e-9);
        let ks = ks_distance(&values[k..], &counts[k..], n_tail as u64, alpha);
        PowerLawFit { alpha, x_min, ks, n_tail }
    });

    fits.into_iter()
        .filter(|f| f.n_tail >= 2)
        .reduce(|best, f| if f.ks < best.ks { f } else { best })
        .ok_or(FitError::DegenerateTail)
}
