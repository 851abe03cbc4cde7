use rayon::prelude::*;
use serde::Serialize;

use super::zeta::hurwitz_zeta;
use super::FitError;

pub const DEFAULT_MIN_SAMPLES: usize = 50;
pub const DEFAULT_XMIN_QUANTILE: f64 = 0.9;

const ALPHA_LO: f64 = 1.0 + 1e-6;
const ALPHA_HI: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    /// Fits on fewer samples are refused.
    pub min_samples: usize,
    /// Candidate xmin values are the distinct observations up to this quantile.
    pub xmin_quantile: f64,
    /// Skip the scan and fit at this xmin.
    pub fixed_xmin: Option<u32>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { min_samples: DEFAULT_MIN_SAMPLES, xmin_quantile: DEFAULT_XMIN_QUANTILE, fixed_xmin: None }
    }
}

/// Discrete power law `p(x) = x^{-α} / ζ(α, xmin)` for `x ≥ xmin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub xmin: u32,
    pub stderr_alpha: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
    pub n_total: usize,
}

impl PowerLawFit {
    /// `P(X ≥ x)` under the fitted law.
    pub fn ccdf(&self, x: u32) -> f64 {
        if x <= self.xmin {
            1.0
        } else {
            hurwitz_zeta(self.alpha, x as f64) / hurwitz_zeta(self.alpha, self.xmin as f64)
        }
    }

    /// The continuous-approximation standard error `(α − 1)/√n_tail`.
    pub fn continuous_stderr(&self) -> f64 {
        (self.alpha - 1.0) / (self.n_tail as f64).sqrt()
    }
}

/// Sorted distinct values with their multiplicities.
struct Tail<'a> {
    values: &'a [(u32, usize)],
    n: usize,
    mean_ln: f64,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximum-likelihood exponent at fixed xmin: minimizes `ln ζ(α, xmin) + α·mean(ln x)`.
fn mle_alpha(xmin: u32, mean_ln: f64) -> f64 {
    let q = xmin as f64;
    golden_min(|a| hurwitz_zeta(a, q).ln() + a * mean_ln, ALPHA_LO, ALPHA_HI, 1e-10)
}

/// Asymptotic standard error from the Fisher information `d²/dα² ln ζ(α, xmin)`.
fn mle_stderr(alpha: f64, xmin: u32, n: usize) -> f64 {
    let q = xmin as f64;
    let h = 1e-3 * (alpha - 1.0).min(1.0);
    let g = |a: f64| hurwitz_zeta(a, q).ln();
    let info = (g(alpha + h) - 2.0 * g(alpha) + g(alpha - h)) / (h * h);
    1.0 / (n as f64 * info).sqrt()
}

/// Sup-distance between the tail's empirical CDF and the fitted CDF over the integers.
fn ks_distance(tail: &Tail<'_>, alpha: f64, xmin: u32) -> f64 {
    let z0 = hurwitz_zeta(alpha, xmin as f64);
    let cdf = |x: u32| 1.0 - hurwitz_zeta(alpha, x as f64 + 1.0) / z0;
    let n = tail.n as f64;
    let mut cum = 0usize;
    let mut d: f64 = 0.0;
    let mut prev_emp = 0.0;
    for &(v, count) in tail.values {
        // just below v the empirical CDF still sits at the previous step
        if v > xmin {
            d = d.max((prev_emp - cdf(v - 1)).abs());
        }
        cum += count;
        let emp = cum as f64 / n;
        d = d.max((emp - cdf(v)).abs());
        prev_emp = emp;
    }
    d
}

fn fit_tail(tail: &Tail<'_>, xmin: u32, n_total: usize) -> PowerLawFit {
    let alpha = mle_alpha(xmin, tail.mean_ln);
    PowerLawFit {
        alpha,
        xmin,
        stderr_alpha: mle_stderr(alpha, xmin, tail.n),
        ks_distance: ks_distance(tail, alpha, xmin),
        n_tail: tail.n,
        n_total,
    }
}

/// Fits a discrete power law to positive integer samples.
///
/// Unless `cfg.fixed_xmin` is set, every distinct observed value up to the
/// `cfg.xmin_quantile` quantile is tried as xmin and the fit with the smallest
/// KS distance wins (ties go to the smaller xmin).
pub fn fit_power_law(lengths: &[u32], cfg: &FitConfig) -> Result<PowerLawFit, FitError> {
    if lengths.len() < cfg.min_samples {
        return Err(FitError::TooFewSamples { n: lengths.len(), min: cfg.min_samples });
    }
    if lengths.contains(&0) {
        return Err(FitError::NonPositive);
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(FitError::Degenerate(format!("all {} samples equal {}", sorted.len(), sorted[0])));
    }
    let mut distinct: Vec<(u32, usize)> = Vec::new();
    for &v in &sorted {
        match distinct.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    // suffix sums of count and count·ln(x) give each candidate's tail statistics
    let mut suffix = vec![(0usize, 0.0f64); distinct.len() + 1];
    for i in (0..distinct.len()).rev() {
        let (v, c) = distinct[i];
        suffix[i] = (suffix[i + 1].0 + c, suffix[i + 1].1 + c as f64 * (v as f64).ln());
    }
    let tail_at = |i: usize| Tail { values: &distinct[i..], n: suffix[i].0, mean_ln: suffix[i].1 / suffix[i].0 as f64 };

    if let Some(xmin) = cfg.fixed_xmin {
        let i = distinct.partition_point(|&(v, _)| v < xmin);
        let tail = tail_at(i);
        if tail.n < 2 || tail.values.len() < 2 {
            return Err(FitError::Degenerate(format!("tail at xmin={xmin} has fewer than two distinct values")));
        }
        return Ok(fit_tail(&tail, xmin, sorted.len()));
    }

    let rank = ((cfg.xmin_quantile * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let cap = sorted[rank - 1];
    let candidates: Vec<usize> =
        (0..distinct.len()).filter(|&i| distinct[i].0 <= cap && distinct.len() - i >= 2).collect();
    candidates
        .par_iter()
        .map(|&i| fit_tail(&tail_at(i), distinct[i].0, sorted.len()))
        .min_by(|a, b| a.ks_distance.total_cmp(&b.ks_distance).then(a.xmin.cmp(&b.xmin)))
        .ok_or_else(|| FitError::Degenerate("no xmin candidate leaves two distinct tail values".into()))
}
