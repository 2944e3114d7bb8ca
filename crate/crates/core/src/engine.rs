//! Evidence sufficiency scoring.
//!
//! Completeness and freshness are read from label metadata. Reliability and
//! representativeness come either from matured labels ("actual" mode) or from
//! proxy health signals routed through the coverage matrix ("proxy" mode).
//! The composite is
//!
//! ```text
//! S = A * (w_c*C + w_f*F + w_r*R + w_p*P),   A = min(1, C/tau_c) * min(1, R/tau_r)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{
    Config, Coverage, CoverageMatrix, DimensionWeights, EstimatedDimension, StatusThresholds,
};
use crate::error::{Error, Result};
use crate::model::{MonitoringWindow, PredictionEvent};
use crate::proxy::{ProxyReading, ReferenceProfile};
use crate::scorer;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Sufficient,
    Degraded,
    Insufficient,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Sufficient => "sufficient",
            Status::Degraded => "degraded",
            Status::Insufficient => "insufficient",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentMode {
    Proxy,
    Actual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScores {
    pub completeness: f64,
    pub freshness: f64,
    pub reliability: f64,
    pub representativeness: f64,
    /// Dimensions holding a carried-forward value because no proxy covered them.
    pub impaired: BTreeSet<EstimatedDimension>,
}

impl DimensionScores {
    pub fn new(completeness: f64, freshness: f64, reliability: f64, representativeness: f64) -> Self {
        DimensionScores {
            completeness,
            freshness,
            reliability,
            representativeness,
            impaired: BTreeSet::new(),
        }
    }

    pub fn weighted_sum(&self, w: &DimensionWeights) -> f64 {
        w.completeness * self.completeness
            + w.freshness * self.freshness
            + w.reliability * self.reliability
            + w.representativeness * self.representativeness
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyAssessment {
    pub window_index: usize,
    pub dims: DimensionScores,
    pub gate: f64,
    pub score: f64,
    pub status: Status,
    /// Set when a proxy dimension had no covering signal. This is a statement
    /// about the monitoring itself, separate from `status`.
    pub monitoring_impaired: bool,
    pub mode: AssessmentMode,
}

impl SufficiencyAssessment {
    /// Status label for reports; impaired monitoring is called out explicitly.
    pub fn status_label(&self) -> String {
        if self.monitoring_impaired {
            format!("{} (monitoring-impaired)", self.status)
        } else {
            self.status.to_string()
        }
    }
}

/// Fraction of window decisions whose label has arrived by `as_of_t`.
pub fn completeness(window: &MonitoringWindow, as_of_t: f64) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::InvalidWindow {
            index: window.index,
            reason: "no events".into(),
        });
    }
    let confirmed = window.events.iter().filter(|e| e.label_confirmed(as_of_t)).count();
    Ok(confirmed as f64 / window.len() as f64)
}

/// `exp(-lambda * delta_t)`.
pub fn freshness(delta_t: f64, lambda: f64) -> Result<f64> {
    if !(delta_t >= 0.0) {
        return Err(Error::OutOfRange {
            what: "label staleness",
            value: delta_t,
            range: "[0, inf)",
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::OutOfRange {
            what: "freshness lambda",
            value: lambda,
            range: "[0, inf)",
        });
    }
    Ok((-lambda * delta_t).exp())
}

/// Decision and label-arrival times of every labeled event in a stream.
#[derive(Debug, Clone, Default)]
pub struct LabelTimeline {
    /// `(arrival, t)`, sorted by arrival.
    entries: Vec<(f64, f64)>,
}

impl LabelTimeline {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a PredictionEvent>) -> Self {
        let mut entries: Vec<(f64, f64)> = events
            .into_iter()
            .filter_map(|e| e.label_arrival_t.map(|a| (a, e.t)))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        LabelTimeline { entries }
    }

    /// Days between `as_of_t` and the median decision time of the most recent
    /// label cohort, where a cohort is every label that arrived on the same
    /// (integer) day as the latest arrival at or before `as_of_t`.
    pub fn staleness(&self, as_of_t: f64) -> Result<f64> {
        let confirmed = self.entries.partition_point(|&(a, _)| a <= as_of_t);
        if confirmed == 0 {
            return Err(Error::NoConfirmedLabels { as_of: as_of_t });
        }
        let latest_day = self.entries[confirmed - 1].0.floor();
        let first = self.entries[..confirmed].partition_point(|&(a, _)| a.floor() < latest_day);
        let mut ts: Vec<f64> = self.entries[first..confirmed].iter().map(|&(_, t)| t).collect();
        ts.sort_by(f64::total_cmp);
        let n = ts.len();
        let median = if n % 2 == 1 {
            ts[n / 2]
        } else {
            0.5 * (ts[n / 2 - 1] + ts[n / 2])
        };
        Ok((as_of_t - median).max(0.0))
    }
}

pub fn label_staleness<'a>(history: impl IntoIterator<Item = &'a PredictionEvent>, as_of_t: f64) -> Result<f64> {
    LabelTimeline::from_events(history).staleness(as_of_t)
}

/// Coverage-weighted mean of proxy healths. With no covering signal the last
/// valid value is carried forward (0 if there is none) and the result is
/// flagged as impaired.
pub fn aggregate_dimension(signals: &[(f64, Coverage)], last_valid: Option<f64>) -> Result<(f64, bool)> {
    if let Some(&(h, _)) = signals.iter().find(|(h, _)| !(0.0..=1.0).contains(h)) {
        return Err(Error::OutOfRange {
            what: "proxy health",
            value: h,
            range: "[0, 1]",
        });
    }
    let total: f64 = signals.iter().map(|(_, c)| c.weight()).sum();
    if total > 0.0 {
        let weighted: f64 = signals.iter().map(|(h, c)| h * c.weight()).sum();
        // Rounding can push the ratio a hair outside the input range.
        let lo = signals.iter().filter(|(_, c)| c.weight() > 0.0).map(|s| s.0).fold(1.0, f64::min);
        let hi = signals.iter().filter(|(_, c)| c.weight() > 0.0).map(|s| s.0).fold(0.0, f64::max);
        Ok(((weighted / total).clamp(lo, hi), false))
    } else {
        Ok((last_valid.unwrap_or(0.0), true))
    }
}

/// `min(1, C / tau_c) * min(1, R / tau_r)`.
pub fn readiness_gate(completeness: f64, reliability: f64, tau_c: f64, tau_r: f64) -> f64 {
    debug_assert!(tau_c > 0.0 && tau_r > 0.0);
    (completeness / tau_c).min(1.0) * (reliability / tau_r).min(1.0)
}

pub fn classify_status(score: f64, thresholds: &StatusThresholds) -> Status {
    if score >= thresholds.sufficient_min {
        Status::Sufficient
    } else if score >= thresholds.degraded_min {
        Status::Degraded
    } else {
        Status::Insufficient
    }
}

pub fn composite_sufficiency(
    window_index: usize,
    dims: DimensionScores,
    gate: f64,
    weights: &DimensionWeights,
    thresholds: &StatusThresholds,
    mode: AssessmentMode,
) -> SufficiencyAssessment {
    let score = gate * dims.weighted_sum(weights);
    SufficiencyAssessment {
        window_index,
        gate,
        score,
        status: classify_status(score, thresholds),
        monitoring_impaired: !dims.impaired.is_empty(),
        dims,
        mode,
    }
}

/// True iff the drifted run sits more than `delta` below the baseline run.
pub fn detect_divergence(s_proxy_drift: f64, s_proxy_baseline: f64, delta: f64) -> bool {
    s_proxy_drift < s_proxy_baseline - delta
}

/// Completeness and freshness from label metadata. Freshness is 0 when no
/// label has been confirmed anywhere in the history.
pub fn observed_metadata(
    window: &MonitoringWindow,
    labels: &LabelTimeline,
    as_of_t: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    let c = completeness(window, as_of_t)?;
    let f = match labels.staleness(as_of_t) {
        Ok(delta) => freshness(delta, lambda)?,
        Err(Error::NoConfirmedLabels { .. }) => {
            log::warn!("window {}: no confirmed labels as of t={as_of_t}; freshness set to 0", window.index);
            0.0
        }
        Err(e) => return Err(e),
    };
    Ok((c, f))
}

/// Routes proxy readings into the two estimated dimensions.
fn dimension_signals(
    readings: &[ProxyReading],
    coverage: &CoverageMatrix,
    dim: EstimatedDimension,
) -> Vec<(f64, Coverage)> {
    readings
        .iter()
        .map(|r| (r.health, coverage.get(r.category, dim)))
        .filter(|(_, c)| *c != Coverage::None)
        .collect()
}

/// Proxy-mode assessor for one stream. Holds the last valid value of each
/// estimated dimension so that an uncovered dimension can be carried forward.
#[derive(Debug, Clone)]
pub struct ProxyAssessor<'a> {
    config: &'a Config,
    profile: &'a ReferenceProfile,
    last_valid: BTreeMap<EstimatedDimension, f64>,
}

impl<'a> ProxyAssessor<'a> {
    pub fn new(config: &'a Config, profile: &'a ReferenceProfile) -> Self {
        ProxyAssessor {
            config,
            profile,
            last_valid: BTreeMap::new(),
        }
    }

    pub fn profile(&self) -> &ReferenceProfile {
        self.profile
    }

    /// Scores a window from an explicit set of readings.
    pub fn assess_readings(
        &mut self,
        window: &MonitoringWindow,
        labels: &LabelTimeline,
        as_of_t: f64,
        readings: &[ProxyReading],
    ) -> Result<SufficiencyAssessment> {
        let cfg = self.config;
        let (c, f) = observed_metadata(window, labels, as_of_t, cfg.freshness.lambda)?;
        let mut impaired = BTreeSet::new();
        let mut estimate = |dim: EstimatedDimension| -> Result<f64> {
            let signals = dimension_signals(readings, &cfg.coverage, dim);
            let (value, is_impaired) = aggregate_dimension(&signals, self.last_valid.get(&dim).copied())?;
            if is_impaired {
                log::warn!("window {}: no proxy covers {dim:?}; monitoring impaired", window.index);
                impaired.insert(dim);
            } else {
                self.last_valid.insert(dim, value);
            }
            Ok(value)
        };
        let r = estimate(EstimatedDimension::Reliability)?;
        let p = estimate(EstimatedDimension::Representativeness)?;
        let mut dims = DimensionScores::new(c, f, r, p);
        dims.impaired = impaired;
        let gate = readiness_gate(c, r, cfg.gate.tau_c, cfg.gate.tau_r_proxy);
        Ok(composite_sufficiency(
            window.index,
            dims,
            gate,
            &cfg.weights,
            &cfg.status,
            AssessmentMode::Proxy,
        ))
    }

    /// Computes the built-in readings for `window`, appends `external`
    /// signals, and scores the result.
    pub fn assess(
        &mut self,
        window: &MonitoringWindow,
        labels: &LabelTimeline,
        as_of_t: f64,
        external: &[ProxyReading],
    ) -> Result<(SufficiencyAssessment, Vec<ProxyReading>)> {
        let mut readings = self.profile.readings(window)?.to_vec();
        readings.extend(external.iter().filter(|r| r.window_index == window.index));
        let a = self.assess_readings(window, labels, as_of_t, &readings)?;
        Ok((a, readings))
    }
}

/// Stateless proxy assessment of a single window.
pub fn assess_window_proxy(
    window: &MonitoringWindow,
    profile: &ReferenceProfile,
    config: &Config,
    labels: &LabelTimeline,
    as_of_t: f64,
    external: &[ProxyReading],
) -> Result<SufficiencyAssessment> {
    ProxyAssessor::new(config, profile)
        .assess(window, labels, as_of_t, external)
        .map(|(a, _)| a)
}

/// Ground-truth assessment: reliability is F1 against matured labels and
/// representativeness is `1 - KS` between reference and current scores.
pub fn assess_window_actual(
    window: &MonitoringWindow,
    reference_scores_sorted: &[f64],
    config: &Config,
    labels: &LabelTimeline,
    as_of_t: f64,
) -> Result<SufficiencyAssessment> {
    let unlabeled = window.events.iter().filter(|e| e.label.is_none()).count();
    if unlabeled > 0 {
        return Err(Error::UnlabeledEvents {
            index: window.index,
            count: unlabeled,
        });
    }
    let (c, f) = observed_metadata(window, labels, as_of_t, config.freshness.lambda)?;
    let scores = window.scores()?;
    let truth: Vec<bool> = window.events.iter().map(|e| e.label.unwrap_or(false)).collect();
    let r = scorer::f1_score(&truth, &scores, config.scorer.threshold)?;
    if reference_scores_sorted.is_empty() {
        return Err(Error::Uncalibrated("reference scores are empty".into()));
    }
    let mut sorted = scores;
    sorted.sort_by(f64::total_cmp);
    let p = 1.0 - stats::ks_sorted(reference_scores_sorted, &sorted);
    let gate = readiness_gate(c, r, config.gate.tau_c, config.gate.tau_r);
    Ok(composite_sufficiency(
        window.index,
        DimensionScores::new(c, f, r, p),
        gate,
        &config.weights,
        &config.status,
        AssessmentMode::Actual,
    ))
}
