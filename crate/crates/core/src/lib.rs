//! Evidence-sufficiency monitoring for deployed classifiers whose labels
//! arrive late.
//!
//! A window is scored on four dimensions (completeness, freshness,
//! reliability, representativeness). Without confirmed labels, reliability
//! and representativeness are estimated from label-free proxy signals. The
//! composite is gated so that thin or unreliable evidence cannot be offset by
//! strength elsewhere.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod injection;
pub mod io;
pub mod model;
pub mod proxy;
pub mod report;
pub mod runner;
pub mod scorer;
pub mod simulator;
pub mod stats;

pub use config::{Config, Coverage, CoverageMatrix, EstimatedDimension, ProxyCategory};
pub use engine::{AssessmentMode, DimensionScores, ProxyAssessor, Status, SufficiencyAssessment};
pub use error::{Error, Result};
pub use model::{MonitoringWindow, PredictionEvent};
pub use proxy::{ProxyReading, ReferenceProfile};
pub use runner::{ExperimentReport, ScenarioReport, WindowRow};

pub use simulator::{DriftType, SimulationSpec, SimulationTrajectory};
