//! Distribution-shift statistics: quantile binning, PSI, the two-sample KS
//! statistic, and mean entropy / confidence of probability scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING_EPSILON: f64 = 1e-4;

/// Bin boundaries for PSI. `edges` split the real line into
/// `(-inf, e0), [e0, e1), ..., [e_last, +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    edges: Vec<f64>,
    smoothing_epsilon: f64,
}

impl BinningSpec {
    pub fn new(edges: Vec<f64>, smoothing_epsilon: f64) -> Result<Self> {
        if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Other("bin edges must be finite and strictly increasing".into()));
        }
        if !(smoothing_epsilon > 0.0) {
            return Err(Error::OutOfRange {
                what: "smoothing_epsilon",
                value: smoothing_epsilon,
                range: "(0, inf)",
            });
        }
        Ok(BinningSpec {
            edges,
            smoothing_epsilon,
        })
    }

    pub fn with_epsilon(mut self, smoothing_epsilon: f64) -> Result<Self> {
        self = BinningSpec::new(self.edges, smoothing_epsilon)?;
        Ok(self)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn smoothing_epsilon(&self) -> f64 {
        self.smoothing_epsilon
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x)
    }

    pub fn counts(&self, sample: &[f64]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_bins()];
        for &x in sample {
            counts[self.bin_of(x)] += 1;
        }
        counts
    }

    /// Smoothed proportions `(count + eps) / (n + eps * bins)`.
    pub fn proportions(&self, counts: &[u64]) -> Vec<f64> {
        let n: u64 = counts.iter().sum();
        let eps = self.smoothing_epsilon;
        let denom = n as f64 + eps * counts.len() as f64;
        counts.iter().map(|&c| (c as f64 + eps) / denom).collect()
    }
}

/// Quantile at probability `p` of an ascending-sorted sample, interpolating
/// linearly between order statistics at position `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Edges at the reference quantiles `k / n_bins`. Tied quantiles collapse,
/// and an edge equal to the reference minimum is dropped since it would only
/// bound an empty lower bin; a constant reference therefore yields one bin.
pub fn quantile_bins(reference: &[f64], n_bins: usize) -> Result<BinningSpec> {
    quantile_bins_with(reference, n_bins, DEFAULT_SMOOTHING_EPSILON)
}

pub fn quantile_bins_with(reference: &[f64], n_bins: usize, smoothing_epsilon: f64) -> Result<BinningSpec> {
    if reference.is_empty() {
        return Err(Error::EmptySample { what: "quantile_bins" });
    }
    if n_bins < 2 {
        return Err(Error::OutOfRange {
            what: "n_bins",
            value: n_bins as f64,
            range: "[2, inf)",
        });
    }
    let sorted = sorted_copy(reference);
    let min = sorted[0];
    let mut edges: Vec<f64> = (1..n_bins)
        .map(|k| quantile_sorted(&sorted, k as f64 / n_bins as f64))
        .filter(|&e| e > min)
        .collect();
    edges.dedup();
    BinningSpec::new(edges, smoothing_epsilon)
}

/// PSI from two count vectors over the same bins.
pub fn psi_from_counts(bins: &BinningSpec, reference: &[u64], current: &[u64]) -> f64 {
    let p = bins.proportions(reference);
    let q = bins.proportions(current);
    let total: f64 = p.iter().zip(&q).map(|(p, q)| (q - p) * (q / p).ln()).sum();
    total.max(0.0)
}

/// Population stability index `sum_b (q_b - p_b) ln(q_b / p_b)`.
pub fn psi(reference: &[f64], current: &[f64], bins: &BinningSpec) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptySample { what: "psi reference" });
    }
    if current.is_empty() {
        return Err(Error::EmptySample { what: "psi current" });
    }
    Ok(psi_from_counts(bins, &bins.counts(reference), &bins.counts(current)))
}

/// Two-sample Kolmogorov-Smirnov statistic, evaluated exactly at every point
/// of the merged support.
pub fn ks_statistic(reference: &[f64], current: &[f64]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptySample { what: "ks reference" });
    }
    if current.is_empty() {
        return Err(Error::EmptySample { what: "ks current" });
    }
    let a = sorted_copy(reference);
    let b = sorted_copy(current);
    Ok(ks_sorted(&a, &b))
}

/// KS statistic for samples already sorted ascending.
pub fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn check_probabilities(scores: &[f64], what: &'static str) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptySample { what });
    }
    match scores.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(Error::OutOfRange {
            what,
            value: p,
            range: "[0, 1]",
        }),
        None => Ok(()),
    }
}

/// Binary entropy in nats, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

pub fn mean_entropy(scores: &[f64]) -> Result<f64> {
    check_probabilities(scores, "mean_entropy")?;
    Ok(scores.iter().map(|&p| binary_entropy(p)).sum::<f64>() / scores.len() as f64)
}

/// Mean of `max(p, 1 - p)`.
pub fn mean_confidence(scores: &[f64]) -> Result<f64> {
    check_probabilities(scores, "mean_confidence")?;
    Ok(scores.iter().map(|&p| p.max(1.0 - p)).sum::<f64>() / scores.len() as f64)
}
