//! Day-by-day sufficiency trajectories over a blind period.
//!
//! Freshness decays as `exp(-lambda * d)`, completeness falls linearly, and
//! reliability / representativeness shrink by a per-drift daily factor. Every
//! day's score goes through the same composite and gate as live assessments.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::config::{Config, DecayFactors};
use crate::engine::{self, AssessmentMode, DimensionScores, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftType {
    None,
    Covariate,
    ConceptPrior,
    Mixed,
}

impl DriftType {
    pub const ALL: [DriftType; 4] = [DriftType::None, DriftType::Covariate, DriftType::ConceptPrior, DriftType::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            DriftType::None => "none",
            DriftType::Covariate => "covariate",
            DriftType::ConceptPrior => "concept_prior",
            DriftType::Mixed => "mixed",
        }
    }
}

impl fmt::Display for DriftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DriftType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DriftType::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown drift type '{s}' (expected none, covariate, concept_prior, mixed)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub initial: DimensionScores,
    pub drift: DriftType,
    pub horizon_days: usize,
    pub lambda: f64,
    /// Completeness on day d is `max(0, initial - slope * d)`.
    pub completeness_slope: f64,
    pub decay: DecayFactors,
}

impl SimulationSpec {
    /// Spec for `drift` using the simulation section of `config`.
    pub fn from_config(config: &Config, drift: DriftType) -> Self {
        let s = &config.simulation;
        SimulationSpec {
            initial: DimensionScores::new(
                s.initial_completeness,
                s.initial_freshness,
                s.initial_reliability,
                s.initial_representativeness,
            ),
            drift,
            horizon_days: s.horizon_days,
            lambda: config.freshness.lambda,
            completeness_slope: s.completeness_slope,
            decay: s.decay.get(drift),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Other(format!("invalid simulation spec: {m}")));
        let i = &self.initial;
        for x in [i.completeness, i.freshness, i.reliability, i.representativeness] {
            if !(0.0..=1.0).contains(&x) {
                return bad(format!("initial value {x} outside [0,1]"));
            }
        }
        if self.horizon_days == 0 {
            return bad("horizon must be at least one day".into());
        }
        if !(self.lambda >= 0.0) || !(self.completeness_slope >= 0.0) {
            return bad("lambda and completeness slope must be >= 0".into());
        }
        for f in [self.decay.reliability, self.decay.representativeness] {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("decay factor {f} outside (0,1]"));
            }
        }
        Ok(())
    }

    pub fn dims_on(&self, day: usize) -> DimensionScores {
        let d = day as f64;
        let i = &self.initial;
        DimensionScores::new(
            (i.completeness - self.completeness_slope * d).max(0.0),
            i.freshness * (-self.lambda * d).exp(),
            i.reliability * self.decay.reliability.powi(day as i32),
            i.representativeness * self.decay.representativeness.powi(day as i32),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub day: usize,
    pub dims: DimensionScores,
    pub gate: f64,
    pub score: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrajectory {
    pub drift: DriftType,
    pub points: Vec<TrajectoryPoint>,
    /// First day below each status threshold, keyed by the threshold's
    /// display form.
    pub crossing_days: BTreeMap<String, Option<usize>>,
}

impl SimulationTrajectory {
    pub fn score_on(&self, day: usize) -> Option<f64> {
        self.points.get(day.checked_sub(1)?).map(|p| p.score)
    }

    /// One row per day: day, C, F, R, P, A, S, status (tab-separated).
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("day\tC\tF\tR\tP\tA\tS\tstatus\n");
        for p in &self.points {
            let d = &p.dims;
            writeln!(
                s,
                "{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{}",
                p.day, d.completeness, d.freshness, d.reliability, d.representativeness, p.gate, p.score, p.status
            )
            .unwrap();
        }
        s
    }
}

/// Runs the trajectory for days `1..=horizon_days`. Gating uses the
/// actual-mode thresholds (`tau_c`, `tau_r`).
pub fn simulate(spec: &SimulationSpec, config: &Config) -> Result<SimulationTrajectory> {
    spec.validate()?;
    let points: Vec<TrajectoryPoint> = (1..=spec.horizon_days)
        .map(|day| {
            let dims = spec.dims_on(day);
            let gate = engine::readiness_gate(dims.completeness, dims.reliability, config.gate.tau_c, config.gate.tau_r);
            let a = engine::composite_sufficiency(day, dims, gate, &config.weights, &config.status, AssessmentMode::Actual);
            TrajectoryPoint {
                day,
                dims: a.dims,
                gate: a.gate,
                score: a.score,
                status: a.status,
            }
        })
        .collect();
    let mut traj = SimulationTrajectory {
        drift: spec.drift,
        points,
        crossing_days: BTreeMap::new(),
    };
    for th in [config.status.sufficient_min, config.status.degraded_min] {
        let day = threshold_crossing(&traj, th);
        traj.crossing_days.insert(format!("{th}"), day);
    }
    Ok(traj)
}

/// First day with `S < threshold`.
pub fn threshold_crossing(trajectory: &SimulationTrajectory, threshold: f64) -> Option<usize> {
    trajectory.points.iter().find(|p| p.score < threshold).map(|p| p.day)
}
