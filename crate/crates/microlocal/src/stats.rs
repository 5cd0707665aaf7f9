//! Least-squares fits and Monte-Carlo summaries.

use crate::quadrature::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Monte-Carlo or quadrature estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// True when the two estimates agree within `k` combined standard errors,
    /// plus a summation roundoff allowance so exact (zero-variance) estimates
    /// can still agree.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        let roundoff = ROUNDOFF_ULPS * f64::EPSILON * self.value.abs().max(other.value.abs());
        (self.value - other.value).abs() <= k * (self.stderr.powi(2) + other.stderr.powi(2)).sqrt() + roundoff
    }
}

const ROUNDOFF_ULPS: f64 = 64.0;

/// Mean and standard error of weighted Monte-Carlo terms.
pub fn mc_estimate(terms: &[f64]) -> Estimate {
    let n = terms.len();
    if n == 0 {
        return Estimate { value: 0.0, stderr: f64::INFINITY };
    }
    let mean = pairwise_sum(terms) / n as f64;
    if n == 1 {
        return Estimate { value: mean, stderr: f64::INFINITY };
    }
    let dev: Vec<f64> = terms.iter().map(|t| (t - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Estimate { value: mean, stderr: (var / n as f64).sqrt() }
}

/// Ordinary least-squares line y = intercept + slope·x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Maximum absolute deviation of a sample from the fitted line.
    pub max_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).abs()).fold(0.0, f64::max);
    Some(LineFit { slope, intercept, max_residual })
}
