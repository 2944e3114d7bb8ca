use std::path::PathBuf;

use thiserror::Error;

use crate::config::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration:{}", fmt_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("{what}: sample is empty")]
    EmptySample { what: &'static str },

    #[error("{what}: value {value} outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid event {event_id}: {reason}")]
    InvalidEvent { event_id: String, reason: String },

    #[error("window {index}: {reason}")]
    InvalidWindow { index: usize, reason: String },

    #[error("no confirmed labels in the monitoring history as of t={as_of}")]
    NoConfirmedLabels { as_of: f64 },

    #[error("events are missing model scores")]
    MissingScores,

    #[error("window {index} has {count} unlabeled events; actual assessment needs matured labels")]
    UnlabeledEvents { index: usize, count: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("reference profile is not calibrated: {0}")]
    Uncalibrated(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        /// 1-based; 0 when the problem concerns the file as a whole.
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to overwrite existing file {0} (pass --overwrite)")]
    WouldOverwrite(PathBuf),

    #[error("{0}")]
    Other(String),
}

impl Error {
    /// Errors caused by bad user input (configuration, data files) rather
    /// than by a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::InvalidEvent { .. }
                | Error::DimensionMismatch { .. }
                | Error::OutOfRange { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("\n  - {x}")).collect()
}
