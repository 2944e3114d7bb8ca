//! Configuration: dimension weights, gate and status thresholds, normalization
//! caps, the proxy coverage matrix, and experiment/simulation settings.
//!
//! The on-disk form is TOML. Every section and key is optional; anything left
//! out takes the fraud-monitoring defaults. See `configs/default.toml` in the
//! repository for the full key list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::injection::ScenarioKind;
use crate::simulator::DriftType;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// One failed invariant, named by the configuration type that owns it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionWeights {
    pub completeness: f64,
    pub freshness: f64,
    pub reliability: f64,
    pub representativeness: f64,
}

impl Default for DimensionWeights {
    fn default() -> Self {
        DimensionWeights {
            completeness: 0.20,
            freshness: 0.30,
            reliability: 0.30,
            representativeness: 0.20,
        }
    }
}

impl DimensionWeights {
    pub fn sum(&self) -> f64 {
        self.completeness + self.freshness + self.reliability + self.representativeness
    }
}

/// Decision-readiness gate thresholds. `tau_r` applies to reliability on the
/// F1 scale, `tau_r_proxy` to reliability on the proxy health scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateThresholds {
    pub tau_c: f64,
    pub tau_r: f64,
    pub tau_r_proxy: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds {
            tau_c: 0.6,
            tau_r: 0.15,
            tau_r_proxy: 0.55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatusThresholds {
    pub sufficient_min: f64,
    pub degraded_min: f64,
}

impl Default for StatusThresholds {
    fn default() -> Self {
        StatusThresholds {
            sufficient_min: 0.8,
            degraded_min: 0.5,
        }
    }
}

/// Divergence value at which each proxy health signal bottoms out at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationCaps {
    /// Score-distribution PSI.
    pub psi_cap: f64,
    /// Aggregated feature PSI.
    pub fpsi_cap: f64,
    /// Absolute shift in mean binary entropy (nats).
    pub ent_cap: f64,
    /// Absolute shift in mean confidence.
    pub conf_cap: f64,
}

impl Default for NormalizationCaps {
    fn default() -> Self {
        NormalizationCaps {
            psi_cap: 0.500,
            fpsi_cap: 1.000,
            ent_cap: 0.150,
            conf_cap: 0.414,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CapsMode {
    /// Use the values in `[caps]` as given.
    #[default]
    Fixed,
    /// Derive caps from sub-windows of the reference window.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mode: CapsMode,
    pub sub_windows: usize,
    pub multiplier: f64,
    pub min_events: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            mode: CapsMode::Fixed,
            sub_windows: 4,
            multiplier: 3.0,
            min_events: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreshnessConfig {
    /// Exponential decay rate of label freshness, per day.
    pub lambda: f64,
}

impl Default for FreshnessConfig {
    fn default() -> Self {
        FreshnessConfig { lambda: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub n_bins: usize,
    pub smoothing_epsilon: f64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            n_bins: 10,
            smoothing_epsilon: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureAggregate {
    #[default]
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyConfig {
    pub feature_aggregate: FeatureAggregate,
}

/// Proxy indicator categories. The first three are computed here; the rest
/// arrive as externally supplied health signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyCategory {
    ScoreDistribution,
    FeatureDrift,
    Uncertainty,
    CrossModel,
    Operational,
    OutcomeMaturity,
    ProxyGroundTruth,
}

impl ProxyCategory {
    pub const ALL: [ProxyCategory; 7] = [
        ProxyCategory::ScoreDistribution,
        ProxyCategory::FeatureDrift,
        ProxyCategory::Uncertainty,
        ProxyCategory::CrossModel,
        ProxyCategory::Operational,
        ProxyCategory::OutcomeMaturity,
        ProxyCategory::ProxyGroundTruth,
    ];

    pub fn is_builtin(self) -> bool {
        matches!(
            self,
            ProxyCategory::ScoreDistribution | ProxyCategory::FeatureDrift | ProxyCategory::Uncertainty
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProxyCategory::ScoreDistribution => "score_distribution",
            ProxyCategory::FeatureDrift => "feature_drift",
            ProxyCategory::Uncertainty => "uncertainty",
            ProxyCategory::CrossModel => "cross_model",
            ProxyCategory::Operational => "operational",
            ProxyCategory::OutcomeMaturity => "outcome_maturity",
            ProxyCategory::ProxyGroundTruth => "proxy_ground_truth",
        }
    }
}

impl fmt::Display for ProxyCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProxyCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ProxyCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown proxy category '{s}'"))
    }
}

/// The two dimensions that are estimated from proxies. Completeness and
/// freshness are always read from label metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatedDimension {
    Reliability,
    Representativeness,
}

/// Strength of a proxy category's coverage of a dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    #[default]
    None,
    Weak,
    Moderate,
    Strong,
}

impl Coverage {
    pub fn weight(self) -> f64 {
        match self {
            Coverage::None => 0.0,
            Coverage::Weak => 0.25,
            Coverage::Moderate => 0.5,
            Coverage::Strong => 1.0,
        }
    }

    pub fn from_weight(w: f64) -> Option<Coverage> {
        [Coverage::None, Coverage::Weak, Coverage::Moderate, Coverage::Strong]
            .into_iter()
            .find(|c| c.weight() == w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CategoryCoverage {
    pub reliability: Coverage,
    pub representativeness: Coverage,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryCoverageOverride {
    reliability: Option<Coverage>,
    representativeness: Option<Coverage>,
}

/// Category × dimension coverage weights.
///
/// Deserializing merges the given entries over the default matrix, so a file
/// only needs to mention the cells it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<ProxyCategory, CategoryCoverageOverride>")]
pub struct CoverageMatrix(BTreeMap<ProxyCategory, CategoryCoverage>);

impl Default for CoverageMatrix {
    fn default() -> Self {
        use Coverage::*;
        use ProxyCategory::*;
        let rows = [
            (ScoreDistribution, Weak, Strong),
            (FeatureDrift, None, Strong),
            (Uncertainty, Moderate, None),
            (CrossModel, Strong, None),
            (Operational, Strong, None),
            (OutcomeMaturity, Strong, None),
            (ProxyGroundTruth, Moderate, None),
        ];
        CoverageMatrix(
            rows.into_iter()
                .map(|(c, r, p)| {
                    (
                        c,
                        CategoryCoverage {
                            reliability: r,
                            representativeness: p,
                        },
                    )
                })
                .collect(),
        )
    }
}

impl From<BTreeMap<ProxyCategory, CategoryCoverageOverride>> for CoverageMatrix {
    fn from(overrides: BTreeMap<ProxyCategory, CategoryCoverageOverride>) -> Self {
        let mut m = CoverageMatrix::default();
        for (cat, o) in overrides {
            let cell = m.0.entry(cat).or_default();
            if let Some(r) = o.reliability {
                cell.reliability = r;
            }
            if let Some(p) = o.representativeness {
                cell.representativeness = p;
            }
        }
        m
    }
}

impl CoverageMatrix {
    pub fn get(&self, category: ProxyCategory, dim: EstimatedDimension) -> Coverage {
        let cell = self.0.get(&category).copied().unwrap_or_default();
        match dim {
            EstimatedDimension::Reliability => cell.reliability,
            EstimatedDimension::Representativeness => cell.representativeness,
        }
    }

    pub fn set(&mut self, category: ProxyCategory, dim: EstimatedDimension, coverage: Coverage) {
        let cell = self.0.entry(category).or_default();
        match dim {
            EstimatedDimension::Reliability => cell.reliability = coverage,
            EstimatedDimension::Representativeness => cell.representativeness = coverage,
        }
    }

    /// Categories with nonzero coverage of `dim`.
    pub fn covering(&self, dim: EstimatedDimension) -> impl Iterator<Item = (ProxyCategory, Coverage)> + '_ {
        self.0
            .keys()
            .map(move |&c| (c, self.get(c, dim)))
            .filter(|(_, w)| *w != Coverage::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Score at or above which a decision counts as positive for F1.
    pub threshold: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            learning_rate: 0.5,
            epochs: 300,
            l2: 1e-4,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub window_days: f64,
    /// Minimum S_proxy drop below baseline that counts as a detection.
    pub delta: f64,
    /// Window k is assessed at `end_t + label_horizon_days`.
    pub label_horizon_days: f64,
    pub scenarios: Vec<ScenarioKind>,
    pub noise_features: Vec<usize>,
    /// Noise multiplier at the first and last monitoring window; linear in between.
    pub covariate_sigma: [f64; 2],
    pub mixed_sigma: [f64; 2],
    pub mixed_flip_rate: [f64; 2],
    /// Observed prevalence targets per monitoring window.
    pub concept_prior_targets: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            window_days: 30.0,
            delta: 0.05,
            label_horizon_days: 30.0,
            scenarios: ScenarioKind::ALL.to_vec(),
            noise_features: vec![0, 1, 2],
            covariate_sigma: [0.3, 2.0],
            mixed_sigma: [0.2, 1.5],
            mixed_flip_rate: [0.03, 0.30],
            concept_prior_targets: vec![0.036, 0.030, 0.020, 0.009, 0.002],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_events: usize,
    pub n_features: usize,
    /// Leading features whose positive-class mean is shifted.
    pub informative: usize,
    pub prevalence: f64,
    pub class_separation: f64,
    pub span_days: f64,
    /// Labels arrive uniformly within this many days of the decision.
    pub label_delay_max_days: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_events: 300_000,
            n_features: 52,
            informative: 3,
            prevalence: 0.035,
            class_separation: 1.0,
            span_days: 180.0,
            label_delay_max_days: 60.0,
        }
    }
}

/// Daily multiplicative decay of reliability and representativeness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFactors {
    pub reliability: f64,
    pub representativeness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayTable {
    pub none: DecayFactors,
    pub covariate: DecayFactors,
    pub concept_prior: DecayFactors,
    pub mixed: DecayFactors,
}

impl Default for DecayTable {
    fn default() -> Self {
        let f = |r, p| DecayFactors {
            reliability: r,
            representativeness: p,
        };
        DecayTable {
            none: f(1.0, 1.0),
            covariate: f(0.9995, 0.995),
            concept_prior: f(0.97, 1.0),
            mixed: f(0.985, 0.997),
        }
    }
}

impl DecayTable {
    pub fn get(&self, drift: DriftType) -> DecayFactors {
        match drift {
            DriftType::None => self.none,
            DriftType::Covariate => self.covariate,
            DriftType::ConceptPrior => self.concept_prior,
            DriftType::Mixed => self.mixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon_days: usize,
    pub initial_completeness: f64,
    pub initial_freshness: f64,
    pub initial_reliability: f64,
    pub initial_representativeness: f64,
    /// Completeness falls linearly by this much per day, floored at zero.
    pub completeness_slope: f64,
    pub decay: DecayTable,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon_days: 180,
            initial_completeness: 1.0,
            initial_freshness: 1.0,
            initial_reliability: 0.133,
            initial_representativeness: 1.0,
            completeness_slope: 0.004,
            decay: DecayTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub weights: DimensionWeights,
    pub gate: GateThresholds,
    pub status: StatusThresholds,
    pub caps: NormalizationCaps,
    pub calibration: CalibrationConfig,
    pub freshness: FreshnessConfig,
    pub binning: BinningConfig,
    pub proxy: ProxyConfig,
    pub coverage: CoverageMatrix,
    pub scorer: ScorerConfig,
    pub experiment: ExperimentConfig,
    pub synthetic: SyntheticConfig,
    pub simulation: SimulationConfig,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Config> {
        toml::from_str(s).map_err(|e| {
            Error::InvalidConfig(vec![Violation {
                field: "config".into(),
                message: e.to_string(),
            }])
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads and validates a TOML configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml_str(&text)?.validate()
    }

    /// Checks every invariant, reporting all violations at once.
    pub fn validate(self) -> Result<Config> {
        let mut v = Vec::new();
        let mut fail = |field: &str, message: String| {
            v.push(Violation {
                field: field.to_string(),
                message,
            })
        };
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let pos_unit = |x: f64| x > 0.0 && x <= 1.0;

        let w = &self.weights;
        for (name, x) in [
            ("completeness", w.completeness),
            ("freshness", w.freshness),
            ("reliability", w.reliability),
            ("representativeness", w.representativeness),
        ] {
            if !unit(x) {
                fail(&format!("DimensionWeights.{name}"), format!("{x} outside [0,1]"));
            }
        }
        if (w.sum() - 1.0).abs() > WEIGHT_SUM_TOL {
            fail("DimensionWeights", format!("weights sum to {}, expected 1", w.sum()));
        }

        let g = &self.gate;
        for (name, x) in [("tau_c", g.tau_c), ("tau_r", g.tau_r), ("tau_r_proxy", g.tau_r_proxy)] {
            if !pos_unit(x) {
                fail(&format!("GateThresholds.{name}"), format!("{x} outside (0,1]"));
            }
        }

        let s = &self.status;
        if !(s.degraded_min > 0.0 && s.degraded_min < s.sufficient_min && s.sufficient_min <= 1.0) {
            fail(
                "StatusThresholds",
                format!(
                    "need 0 < degraded_min < sufficient_min <= 1, got {} / {}",
                    s.degraded_min, s.sufficient_min
                ),
            );
        }

        let c = &self.caps;
        for (name, x) in [
            ("psi_cap", c.psi_cap),
            ("fpsi_cap", c.fpsi_cap),
            ("ent_cap", c.ent_cap),
            ("conf_cap", c.conf_cap),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                fail(&format!("NormalizationCaps.{name}"), format!("{x} must be positive"));
            }
        }

        let cal = &self.calibration;
        if cal.sub_windows < 2 {
            fail("CalibrationConfig.sub_windows", format!("{} < 2", cal.sub_windows));
        }
        if !(cal.multiplier > 0.0 && cal.multiplier.is_finite()) {
            fail("CalibrationConfig.multiplier", format!("{} must be positive", cal.multiplier));
        }
        if cal.min_events == 0 {
            fail("CalibrationConfig.min_events", "must be at least 1".into());
        }

        if !(self.freshness.lambda >= 0.0 && self.freshness.lambda.is_finite()) {
            fail("FreshnessConfig.lambda", format!("{} must be >= 0", self.freshness.lambda));
        }

        if self.binning.n_bins < 2 {
            fail("BinningConfig.n_bins", format!("{} < 2", self.binning.n_bins));
        }
        if !(self.binning.smoothing_epsilon > 0.0) {
            fail(
                "BinningConfig.smoothing_epsilon",
                format!("{} must be positive", self.binning.smoothing_epsilon),
            );
        }

        let sc = &self.scorer;
        if !(sc.learning_rate > 0.0) {
            fail("ScorerConfig.learning_rate", format!("{} must be positive", sc.learning_rate));
        }
        if sc.epochs == 0 {
            fail("ScorerConfig.epochs", "must be at least 1".into());
        }
        if !(sc.l2 >= 0.0) {
            fail("ScorerConfig.l2", format!("{} must be >= 0", sc.l2));
        }
        if !unit(sc.threshold) {
            fail("ScorerConfig.threshold", format!("{} outside [0,1]", sc.threshold));
        }

        let e = &self.experiment;
        if !(e.window_days > 0.0) {
            fail("ExperimentConfig.window_days", format!("{} must be positive", e.window_days));
        }
        if !(e.delta > 0.0) {
            fail("ExperimentConfig.delta", format!("{} must be positive", e.delta));
        }
        if !(e.label_horizon_days >= 0.0) {
            fail(
                "ExperimentConfig.label_horizon_days",
                format!("{} must be >= 0", e.label_horizon_days),
            );
        }
        for (name, pair) in [("covariate_sigma", e.covariate_sigma), ("mixed_sigma", e.mixed_sigma)] {
            if pair.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                fail(&format!("ScenarioSpec.{name}"), format!("{pair:?} must be >= 0"));
            }
        }
        if e.mixed_flip_rate.iter().any(|&x| !unit(x)) {
            fail("ScenarioSpec.mixed_flip_rate", format!("{:?} outside [0,1]", e.mixed_flip_rate));
        }
        if e.concept_prior_targets.iter().any(|&x| !unit(x)) {
            fail(
                "ScenarioSpec.concept_prior_targets",
                format!("{:?} outside [0,1]", e.concept_prior_targets),
            );
        }

        let sy = &self.synthetic;
        if sy.n_events == 0 {
            fail("SyntheticConfig.n_events", "must be at least 1".into());
        }
        if sy.n_features == 0 || sy.informative > sy.n_features {
            fail(
                "SyntheticConfig.informative",
                format!("need 0 < informative ({}) <= n_features ({})", sy.informative, sy.n_features),
            );
        }
        if !(sy.prevalence > 0.0 && sy.prevalence < 1.0) {
            fail("SyntheticConfig.prevalence", format!("{} outside (0,1)", sy.prevalence));
        }
        if !(sy.span_days > 0.0) {
            fail("SyntheticConfig.span_days", format!("{} must be positive", sy.span_days));
        }
        if !(sy.label_delay_max_days >= 0.0) {
            fail(
                "SyntheticConfig.label_delay_max_days",
                format!("{} must be >= 0", sy.label_delay_max_days),
            );
        }

        let sim = &self.simulation;
        if sim.horizon_days == 0 {
            fail("SimulationSpec.horizon_days", "must be at least 1".into());
        }
        for (name, x) in [
            ("initial_completeness", sim.initial_completeness),
            ("initial_freshness", sim.initial_freshness),
            ("initial_reliability", sim.initial_reliability),
            ("initial_representativeness", sim.initial_representativeness),
        ] {
            if !unit(x) {
                fail(&format!("SimulationSpec.{name}"), format!("{x} outside [0,1]"));
            }
        }
        if !(sim.completeness_slope >= 0.0) {
            fail(
                "SimulationSpec.completeness_slope",
                format!("{} must be >= 0", sim.completeness_slope),
            );
        }
        for drift in DriftType::ALL {
            let d = sim.decay.get(drift);
            for (name, x) in [("reliability", d.reliability), ("representativeness", d.representativeness)] {
                if !pos_unit(x) {
                    fail(
                        &format!("SimulationSpec.decay.{}.{name}", drift.as_str()),
                        format!("{x} outside (0,1]"),
                    );
                }
            }
        }

        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}
