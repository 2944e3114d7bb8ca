//! Scored decisions and the time windows they are grouped into.
//!
//! Timestamps are real-valued day offsets from the stream origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored decision, with its (possibly still pending) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEvent {
    pub event_id: String,
    /// Decision time in days.
    pub t: f64,
    pub features: Vec<f64>,
    /// Predicted positive-class probability. `None` until a scorer has run.
    pub score: Option<f64>,
    pub label: Option<bool>,
    /// Day the label became known.
    pub label_arrival_t: Option<f64>,
}

impl PredictionEvent {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidEvent {
                event_id: self.event_id.clone(),
                reason,
            })
        };
        if !self.t.is_finite() {
            return bad(format!("timestamp {} is not finite", self.t));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return bad(format!("score {s} outside [0,1]"));
            }
        }
        if let Some(i) = self.features.iter().position(|x| !x.is_finite()) {
            return bad(format!("feature f_{i} is not finite"));
        }
        match (self.label, self.label_arrival_t) {
            (Some(_), Some(arr)) if arr < self.t => {
                bad(format!("label arrives at {arr}, before the decision at {}", self.t))
            }
            (Some(_), Some(arr)) if !arr.is_finite() => bad("label arrival is not finite".into()),
            (Some(_), None) => bad("label present without label_arrival_t".into()),
            (None, Some(_)) => bad("label_arrival_t present without label".into()),
            _ => Ok(()),
        }
    }

    /// True when the label is known at `as_of_t`.
    pub fn label_confirmed(&self, as_of_t: f64) -> bool {
        self.label_arrival_t.is_some_and(|a| a <= as_of_t)
    }
}

/// A contiguous `[start_t, end_t)` slice of the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringWindow {
    pub index: usize,
    pub start_t: f64,
    pub end_t: f64,
    pub events: Vec<PredictionEvent>,
}

impl MonitoringWindow {
    pub fn new(index: usize, start_t: f64, end_t: f64, events: Vec<PredictionEvent>) -> Result<Self> {
        let w = MonitoringWindow {
            index,
            start_t,
            end_t,
            events,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidWindow {
                index: self.index,
                reason,
            })
        };
        if !(self.start_t < self.end_t) {
            return bad(format!("start {} is not before end {}", self.start_t, self.end_t));
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &self.events {
            if e.t < self.start_t || e.t >= self.end_t {
                return bad(format!("event {} at t={} outside window", e.event_id, e.t));
            }
            if e.t < prev {
                return bad(format!("event {} out of time order", e.event_id));
            }
            prev = e.t;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }

    /// Feature dimension, taken from the first event.
    pub fn n_features(&self) -> usize {
        self.events.first().map_or(0, |e| e.features.len())
    }

    pub fn scores(&self) -> Result<Vec<f64>> {
        self.events
            .iter()
            .map(|e| e.score.ok_or(Error::MissingScores))
            .collect()
    }

    /// Column-major copy of the feature matrix.
    pub fn feature_columns(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.n_features();
        let mut cols = vec![Vec::with_capacity(self.len()); d];
        for e in &self.events {
            if e.features.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: e.features.len(),
                });
            }
            for (col, &x) in cols.iter_mut().zip(&e.features) {
                col.push(x);
            }
        }
        Ok(cols)
    }

    /// Fraction of labeled events that are positive, ignoring arrival time.
    pub fn positive_rate(&self) -> Option<f64> {
        let (pos, n) = self
            .events
            .iter()
            .filter_map(|e| e.label)
            .fold((0usize, 0usize), |(p, n), l| (p + usize::from(l), n + 1));
        (n > 0).then(|| pos as f64 / n as f64)
    }

    /// Events with `t` in `[from, to)`.
    pub fn slice_time(&self, from: f64, to: f64) -> impl Iterator<Item = &PredictionEvent> {
        self.events.iter().filter(move |e| e.t >= from && e.t < to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, label: Option<(bool, f64)>) -> PredictionEvent {
        PredictionEvent {
            event_id: format!("e{t}"),
            t,
            features: vec![0.0],
            score: Some(0.5),
            label: label.map(|l| l.0),
            label_arrival_t: label.map(|l| l.1),
        }
    }

    #[test]
    fn label_arrival_before_decision_is_rejected() {
        assert!(ev(5.0, Some((true, 4.0))).validate().is_err());
        assert!(ev(5.0, Some((true, 5.0))).validate().is_ok());
    }

    #[test]
    fn label_and_arrival_travel_together() {
        let mut e = ev(1.0, None);
        e.label = Some(true);
        assert!(e.validate().is_err());
        e.label = None;
        e.label_arrival_t = Some(3.0);
        assert!(e.validate().is_err());
    }

    #[test]
    fn score_out_of_unit_interval_rejected() {
        let mut e = ev(1.0, None);
        e.score = Some(1.3);
        assert!(e.validate().is_err());
    }

    #[test]
    fn window_rejects_out_of_range_and_unordered_events() {
        assert!(MonitoringWindow::new(0, 0.0, 10.0, vec![ev(10.0, None)]).is_err());
        assert!(MonitoringWindow::new(0, 0.0, 10.0, vec![ev(3.0, None), ev(2.0, None)]).is_err());
        assert!(MonitoringWindow::new(0, 5.0, 5.0, vec![]).is_err());
        assert!(MonitoringWindow::new(0, 0.0, 10.0, vec![ev(2.0, None), ev(3.0, None)]).is_ok());
    }
}
