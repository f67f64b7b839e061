//! Paired Wilcoxon signed-rank test and the per-run improvement metric.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use mechsynth_agent::RunRecord;

/// Largest reduced sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 25;
/// Smallest reduced sample size the test accepts.
pub const MIN_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {MIN_N} non-zero differences, got {0}")]
    TooFewPairs(usize),
    #[error("non-finite value in sample")]
    NonFinite,
}

/// Midranks of `values` (1-based), ties sharing the average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Null distribution of `W+` for the given ranks, indexed by `2·W+`.
/// Midranks are multiples of 1/2, so doubling keeps every sum integral.
fn exact_counts(ranks: &[f64]) -> Vec<f64> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for d in doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + d] += counts[s];
            }
        }
        reach += d;
    }
    counts
}

/// Two-sided exact p-value for `W+ = w_plus` given the ranks.
pub fn exact_p_value(ranks: &[f64], w_plus: f64) -> f64 {
    let counts = exact_counts(ranks);
    let total: f64 = counts.iter().sum();
    let w2 = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w2.min(counts.len() - 1)].iter().sum();
    let upper: f64 = counts[w2.min(counts.len() - 1)..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// Paired two-sided Wilcoxon signed-rank test on `x - y`.
///
/// Zero differences are dropped. Up to [`EXACT_MAX_N`] remaining pairs the
/// p-value comes from the exact permutation distribution (midranks for ties);
/// above it, from the normal approximation with tie and continuity correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 && !x.is_empty() {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
            degenerate: true,
        });
    }
    if n < MIN_N {
        return Err(StatsError::TooFewPairs(n));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let w_minus = (n * (n + 1)) as f64 / 2.0 - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p_value, exact) = if n <= EXACT_MAX_N {
        (exact_p_value(&ranks, w_plus), true)
    } else {
        (normal_p_value(&abs, statistic, n), false)
    };
    Ok(WilcoxonResult { statistic, w_plus, w_minus, p_value, n, exact, degenerate: false })
}

fn normal_p_value(abs: &[f64], statistic: f64, n: usize) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// `100 · (first − best) / first`; 0 without improvement, `None` without a valid candidate.
pub fn pct_improvement_values(first_valid: Option<f64>, best: Option<f64>) -> Option<f64> {
    let (first, best) = (first_valid?, best?);
    if first > best && first > 0.0 {
        Some(100.0 * (first - best) / first)
    } else {
        Some(0.0)
    }
}

pub fn pct_improvement(record: &RunRecord) -> Option<f64> {
    pct_improvement_values(record.summary.first_valid_chamfer, record.best_chamfer())
}
