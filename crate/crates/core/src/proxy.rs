//! Label-free proxy health signals for score distribution, feature drift and
//! model uncertainty.
//!
//! Each monitor turns a raw divergence against the reference window into a
//! health value in `[0, 1]` via `max(0, 1 - raw / cap)`. Nothing in this module
//! reads event labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    BinningConfig, CalibrationConfig, CapsMode, Config, FeatureAggregate, NormalizationCaps, ProxyCategory,
};
use crate::error::{Error, Result};
use crate::model::MonitoringWindow;
use crate::stats::{self, BinningSpec};

/// Smallest cap produced by calibration.
pub const MIN_CALIBRATED_CAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RawDivergence {
    Scalar { value: f64 },
    /// Uncertainty keeps both sub-signals.
    Pair { entropy: f64, confidence: f64 },
    /// Pre-normalized signal supplied from outside.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyReading {
    pub category: ProxyCategory,
    pub raw: RawDivergence,
    pub health: f64,
    pub window_index: usize,
}

impl ProxyReading {
    /// A health signal for one of the externally computed categories.
    pub fn external(category: ProxyCategory, health: f64, window_index: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&health) {
            return Err(Error::OutOfRange {
                what: "external proxy health",
                value: health,
                range: "[0, 1]",
            });
        }
        Ok(ProxyReading {
            category,
            raw: RawDivergence::External,
            health,
            window_index,
        })
    }
}

/// `max(0, 1 - raw / cap)`.
pub fn health_from_divergence(raw: f64, cap: f64) -> Result<f64> {
    if !(raw >= 0.0) {
        return Err(Error::OutOfRange {
            what: "divergence",
            value: raw,
            range: "[0, inf)",
        });
    }
    if !(cap > 0.0) {
        return Err(Error::OutOfRange {
            what: "cap",
            value: cap,
            range: "(0, inf)",
        });
    }
    Ok((1.0 - raw / cap).max(0.0))
}

pub fn score_distribution_health(
    ref_scores: &[f64],
    cur_scores: &[f64],
    caps: &NormalizationCaps,
    bins: &BinningSpec,
    window_index: usize,
) -> Result<ProxyReading> {
    let raw = stats::psi(ref_scores, cur_scores, bins)?;
    Ok(ProxyReading {
        category: ProxyCategory::ScoreDistribution,
        raw: RawDivergence::Scalar { value: raw },
        health: health_from_divergence(raw, caps.psi_cap)?,
        window_index,
    })
}

fn aggregate(values: &[f64], how: FeatureAggregate) -> f64 {
    match how {
        FeatureAggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
        FeatureAggregate::Max => values.iter().copied().fold(0.0, f64::max),
    }
}

/// Aggregated per-feature PSI. Features are given column-major, one bin spec
/// per feature.
pub fn feature_drift_health(
    ref_features: &[Vec<f64>],
    cur_features: &[Vec<f64>],
    caps: &NormalizationCaps,
    bins: &[BinningSpec],
    how: FeatureAggregate,
    window_index: usize,
) -> Result<ProxyReading> {
    if ref_features.len() != cur_features.len() || bins.len() != ref_features.len() {
        return Err(Error::DimensionMismatch {
            expected: ref_features.len(),
            actual: cur_features.len(),
        });
    }
    if ref_features.is_empty() {
        return Err(Error::EmptySample { what: "feature_drift features" });
    }
    let per_feature = ref_features
        .par_iter()
        .zip(cur_features)
        .zip(bins)
        .map(|((r, c), b)| stats::psi(r, c, b))
        .collect::<Result<Vec<f64>>>()?;
    let raw = aggregate(&per_feature, how);
    Ok(ProxyReading {
        category: ProxyCategory::FeatureDrift,
        raw: RawDivergence::Scalar { value: raw },
        health: health_from_divergence(raw, caps.fpsi_cap)?,
        window_index,
    })
}

fn uncertainty_reading(ent_div: f64, conf_div: f64, caps: &NormalizationCaps, window_index: usize) -> Result<ProxyReading> {
    let health = 0.5 * (health_from_divergence(ent_div, caps.ent_cap)? + health_from_divergence(conf_div, caps.conf_cap)?);
    Ok(ProxyReading {
        category: ProxyCategory::Uncertainty,
        raw: RawDivergence::Pair {
            entropy: ent_div,
            confidence: conf_div,
        },
        health,
        window_index,
    })
}

/// Equal-weight mean of the entropy-shift and confidence-shift healths.
pub fn uncertainty_health(
    ref_scores: &[f64],
    cur_scores: &[f64],
    caps: &NormalizationCaps,
    window_index: usize,
) -> Result<ProxyReading> {
    let ent_div = (stats::mean_entropy(cur_scores)? - stats::mean_entropy(ref_scores)?).abs();
    let conf_div = (stats::mean_confidence(cur_scores)? - stats::mean_confidence(ref_scores)?).abs();
    uncertainty_reading(ent_div, conf_div, caps, window_index)
}

/// Reference-window quantities reused for every monitored window.
#[derive(Debug, Clone)]
pub struct ReferenceProfile {
    pub caps: NormalizationCaps,
    pub feature_aggregate: FeatureAggregate,
    score_bins: BinningSpec,
    score_counts: Vec<u64>,
    feature_bins: Vec<BinningSpec>,
    feature_counts: Vec<Vec<u64>>,
    ref_entropy: f64,
    ref_confidence: f64,
    sorted_scores: Vec<f64>,
    feature_std: Vec<f64>,
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

impl ReferenceProfile {
    /// Builds the profile from a scored reference window. Caps come from the
    /// configuration or are calibrated on the window, per `calibration.mode`.
    pub fn from_config(reference: &MonitoringWindow, config: &Config) -> Result<Self> {
        let caps = match config.calibration.mode {
            CapsMode::Fixed => config.caps,
            CapsMode::Calibrated => {
                calibrate_caps(reference, &config.calibration, &config.binning, config.proxy.feature_aggregate)?
            }
        };
        Self::build(reference, caps, &config.binning, config.proxy.feature_aggregate)
    }

    pub fn build(
        reference: &MonitoringWindow,
        caps: NormalizationCaps,
        binning: &BinningConfig,
        feature_aggregate: FeatureAggregate,
    ) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::Uncalibrated(format!("reference window {} is empty", reference.index)));
        }
        let scores = reference.scores()?;
        let columns = reference.feature_columns()?;
        let score_bins = stats::quantile_bins_with(&scores, binning.n_bins, binning.smoothing_epsilon)?;
        let feature_bins = columns
            .par_iter()
            .map(|c| stats::quantile_bins_with(c, binning.n_bins, binning.smoothing_epsilon))
            .collect::<Result<Vec<_>>>()?;
        let feature_counts = columns.iter().zip(&feature_bins).map(|(c, b)| b.counts(c)).collect();
        let mut sorted_scores = scores.clone();
        sorted_scores.sort_by(f64::total_cmp);
        Ok(ReferenceProfile {
            caps,
            feature_aggregate,
            score_counts: score_bins.counts(&scores),
            score_bins,
            feature_bins,
            feature_counts,
            ref_entropy: stats::mean_entropy(&scores)?,
            ref_confidence: stats::mean_confidence(&scores)?,
            feature_std: columns.iter().map(|c| population_std(c)).collect(),
            sorted_scores,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_bins.len()
    }

    /// Reference standard deviation of each feature.
    pub fn feature_std(&self) -> &[f64] {
        &self.feature_std
    }

    pub fn sorted_scores(&self) -> &[f64] {
        &self.sorted_scores
    }

    /// The three built-in readings for `window`, in category order.
    pub fn readings(&self, window: &MonitoringWindow) -> Result<[ProxyReading; 3]> {
        if window.is_empty() {
            return Err(Error::InvalidWindow {
                index: window.index,
                reason: "no events".into(),
            });
        }
        let scores = window.scores()?;
        let columns = window.feature_columns()?;
        if columns.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: columns.len(),
            });
        }
        let idx = window.index;

        let score_psi = stats::psi_from_counts(&self.score_bins, &self.score_counts, &self.score_bins.counts(&scores));
        let score = ProxyReading {
            category: ProxyCategory::ScoreDistribution,
            raw: RawDivergence::Scalar { value: score_psi },
            health: health_from_divergence(score_psi, self.caps.psi_cap)?,
            window_index: idx,
        };

        let per_feature: Vec<f64> = columns
            .par_iter()
            .zip(&self.feature_bins)
            .zip(&self.feature_counts)
            .map(|((c, b), rc)| stats::psi_from_counts(b, rc, &b.counts(c)))
            .collect();
        let fpsi = aggregate(&per_feature, self.feature_aggregate);
        let feature = ProxyReading {
            category: ProxyCategory::FeatureDrift,
            raw: RawDivergence::Scalar { value: fpsi },
            health: health_from_divergence(fpsi, self.caps.fpsi_cap)?,
            window_index: idx,
        };

        let ent_div = (stats::mean_entropy(&scores)? - self.ref_entropy).abs();
        let conf_div = (stats::mean_confidence(&scores)? - self.ref_confidence).abs();
        let uncertainty = uncertainty_reading(ent_div, conf_div, &self.caps, idx)?;

        Ok([score, feature, uncertainty])
    }
}

/// Derives caps from the reference window alone: it is cut into
/// `sub_windows` equal-duration slices, each slice is compared with the rest
/// of the window, and every cap is `multiplier` times the largest divergence
/// seen, floored at [`MIN_CALIBRATED_CAP`].
pub fn calibrate_caps(
    reference: &MonitoringWindow,
    calibration: &CalibrationConfig,
    binning: &BinningConfig,
    feature_aggregate: FeatureAggregate,
) -> Result<NormalizationCaps> {
    let m = calibration.sub_windows;
    if m < 2 {
        return Err(Error::OutOfRange {
            what: "sub_windows",
            value: m as f64,
            range: "[2, inf)",
        });
    }
    if !(calibration.multiplier > 0.0) {
        return Err(Error::OutOfRange {
            what: "calibration multiplier",
            value: calibration.multiplier,
            range: "(0, inf)",
        });
    }
    let scores = reference.scores()?;
    let columns = reference.feature_columns()?;
    let score_bins = stats::quantile_bins_with(&scores, binning.n_bins, binning.smoothing_epsilon)?;
    let feature_bins = columns
        .iter()
        .map(|c| stats::quantile_bins_with(c, binning.n_bins, binning.smoothing_epsilon))
        .collect::<Result<Vec<_>>>()?;

    let width = reference.duration() / m as f64;
    let slice_of = |t: f64| (((t - reference.start_t) / width) as usize).min(m - 1);
    let membership: Vec<usize> = reference.events.iter().map(|e| slice_of(e.t)).collect();

    let split = |xs: &[f64], k: usize| -> (Vec<f64>, Vec<f64>) {
        let (mut inside, mut rest) = (Vec::new(), Vec::new());
        for (&x, &s) in xs.iter().zip(&membership) {
            if s == k {
                inside.push(x)
            } else {
                rest.push(x)
            }
        }
        (inside, rest)
    };

    let mut max = [0.0f64; 4];
    for k in 0..m {
        let (sub, rest) = split(&scores, k);
        if sub.len() < calibration.min_events || rest.len() < calibration.min_events {
            return Err(Error::InvalidWindow {
                index: reference.index,
                reason: format!(
                    "calibration sub-window {k} has {} events (rest {}), need at least {}",
                    sub.len(),
                    rest.len(),
                    calibration.min_events
                ),
            });
        }
        let score_psi = stats::psi_from_counts(&score_bins, &score_bins.counts(&rest), &score_bins.counts(&sub));
        let per_feature: Vec<f64> = columns
            .par_iter()
            .zip(&feature_bins)
            .map(|(c, b)| {
                let (s, r) = split(c, k);
                stats::psi_from_counts(b, &b.counts(&r), &b.counts(&s))
            })
            .collect();
        let fpsi = aggregate(&per_feature, feature_aggregate);
        let ent = (stats::mean_entropy(&sub)? - stats::mean_entropy(&rest)?).abs();
        let conf = (stats::mean_confidence(&sub)? - stats::mean_confidence(&rest)?).abs();
        for (slot, v) in max.iter_mut().zip([score_psi, fpsi, ent, conf]) {
            *slot = slot.max(v);
        }
    }
    let cap = |v: f64| (calibration.multiplier * v).max(MIN_CALIBRATED_CAP);
    Ok(NormalizationCaps {
        psi_cap: cap(max[0]),
        fpsi_cap: cap(max[1]),
        ent_cap: cap(max[2]),
        conf_cap: cap(max[3]),
    })
}
