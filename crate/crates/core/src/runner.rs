//! Windowing, stream monitoring, and the scenario experiment.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, NormalizationCaps, ProxyCategory};
use crate::engine::{self, LabelTimeline, ProxyAssessor, SufficiencyAssessment};
use crate::error::{Error, Result};
use crate::injection::{self, ScenarioKind, ScenarioSpec};
use crate::io::{self, DataFormat, IngestOptions};
use crate::model::{MonitoringWindow, PredictionEvent};
use crate::proxy::{ProxyReading, ReferenceProfile};
use crate::scorer::{self, LogisticModel};

/// The part of the stream after the last complete window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedTail {
    pub start_t: f64,
    pub end_t: f64,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Window 0 is the reference.
    pub windows: Vec<MonitoringWindow>,
    pub dropped_tail: Option<DroppedTail>,
}

impl Partition {
    pub fn reference(&self) -> &MonitoringWindow {
        &self.windows[0]
    }

    pub fn monitoring(&self) -> &[MonitoringWindow] {
        &self.windows[1..]
    }
}

/// Splits a time-ordered stream into consecutive `[k*w, (k+1)*w)` windows
/// starting at t = 0. The stream span is `ceil(max t)` days; a trailing
/// partial window is dropped with a warning.
pub fn window_partition(stream: Vec<PredictionEvent>, window_days: f64) -> Result<Partition> {
    if stream.is_empty() {
        return Err(Error::EmptySample { what: "event stream" });
    }
    if !(window_days > 0.0 && window_days.is_finite()) {
        return Err(Error::OutOfRange {
            what: "window_days",
            value: window_days,
            range: "(0, inf)",
        });
    }
    if let Some(e) = stream.iter().find(|e| e.t < 0.0) {
        return Err(Error::InvalidEvent {
            event_id: e.event_id.clone(),
            reason: format!("t={} precedes the stream origin 0", e.t),
        });
    }
    let max_t = stream.iter().map(|e| e.t).fold(0.0, f64::max);
    let span = max_t.ceil().max(1.0);
    let n_windows = ((span / window_days) + 1e-9).floor() as usize;
    if n_windows == 0 {
        return Err(Error::InvalidWindow {
            index: 0,
            reason: format!("window of {window_days} days exceeds the {span}-day stream span"),
        });
    }
    let covered = n_windows as f64 * window_days;
    let mut buckets: Vec<Vec<PredictionEvent>> = vec![Vec::new(); n_windows];
    let mut tail = 0usize;
    for e in stream {
        let k = (e.t / window_days).floor() as usize;
        if k < n_windows {
            buckets[k].push(e);
        } else {
            tail += 1;
        }
    }
    let dropped_tail = (covered < span).then(|| {
        log::warn!("dropping partial tail window [{covered}, {span}) with {tail} events");
        DroppedTail {
            start_t: covered,
            end_t: span,
            events: tail,
        }
    });
    let windows = buckets
        .into_iter()
        .enumerate()
        .map(|(k, ev)| MonitoringWindow::new(k, k as f64 * window_days, (k + 1) as f64 * window_days, ev))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition { windows, dropped_tail })
}

/// Where the experiment's events come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    File {
        path: PathBuf,
        format: DataFormat,
        allow_unsorted: bool,
    },
    /// Generated from the `synthetic` config section and the experiment seed.
    Synthetic,
    Events(Vec<PredictionEvent>),
}

impl DataSource {
    pub fn load(self, config: &Config) -> Result<Vec<PredictionEvent>> {
        match self {
            DataSource::File {
                path,
                format,
                allow_unsorted,
            } => io::ingest(path, format, IngestOptions { allow_unsorted }),
            DataSource::Synthetic => injection::generate_synthetic(&config.synthetic, config.experiment.seed),
            DataSource::Events(ev) => Ok(ev),
        }
    }
}

/// One assessed window. Column order follows the experiment table: scenario,
/// window, fraud rate, proxy healths, proxy dimensions, scores, status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub scenario: String,
    pub window: usize,
    pub fraud_rate: Option<f64>,
    pub p_scr: f64,
    pub p_fea: f64,
    pub p_unc: f64,
    pub r_proxy: f64,
    pub p_proxy: f64,
    pub a_proxy: f64,
    pub s_proxy: f64,
    pub s_actual: Option<f64>,
    pub status: String,
    pub completeness: f64,
    pub freshness: f64,
    pub r_actual: Option<f64>,
    pub p_actual: Option<f64>,
    pub a_actual: Option<f64>,
    pub status_actual: Option<String>,
    pub monitoring_impaired: bool,
    /// `|S_proxy - S_actual|`.
    pub gap: Option<f64>,
    /// Baseline `S_proxy` minus this row's `S_proxy`.
    pub baseline_margin: Option<f64>,
    pub detected: Option<bool>,
    /// Health of externally supplied signals, by category.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external: Vec<(ProxyCategory, f64)>,
}

impl WindowRow {
    fn new(scenario: &str, window: &MonitoringWindow, proxy: &SufficiencyAssessment, readings: &[ProxyReading]) -> Self {
        let health = |c: ProxyCategory| readings.iter().find(|r| r.category == c).map_or(f64::NAN, |r| r.health);
        WindowRow {
            scenario: scenario.to_string(),
            window: window.index,
            fraud_rate: window.positive_rate(),
            p_scr: health(ProxyCategory::ScoreDistribution),
            p_fea: health(ProxyCategory::FeatureDrift),
            p_unc: health(ProxyCategory::Uncertainty),
            r_proxy: proxy.dims.reliability,
            p_proxy: proxy.dims.representativeness,
            a_proxy: proxy.gate,
            s_proxy: proxy.score,
            s_actual: None,
            status: proxy.status_label(),
            completeness: proxy.dims.completeness,
            freshness: proxy.dims.freshness,
            r_actual: None,
            p_actual: None,
            a_actual: None,
            status_actual: None,
            monitoring_impaired: proxy.monitoring_impaired,
            gap: None,
            baseline_margin: None,
            detected: None,
            external: readings
                .iter()
                .filter(|r| !r.category.is_builtin())
                .map(|r| (r.category, r.health))
                .collect(),
        }
    }

    fn set_actual(&mut self, actual: &SufficiencyAssessment) {
        self.s_actual = Some(actual.score);
        self.r_actual = Some(actual.dims.reliability);
        self.p_actual = Some(actual.dims.representativeness);
        self.a_actual = Some(actual.gate);
        self.status_actual = Some(actual.status.to_string());
        self.gap = Some((self.s_proxy - actual.score).abs());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub rows: Vec<WindowRow>,
    pub monitoring_windows: usize,
    /// `None` for the baseline, which is the comparator.
    pub detected_windows: Option<usize>,
    pub detection_rate: Option<f64>,
    /// First window with `S_proxy` below the degraded threshold.
    pub proxy_crossing: Option<usize>,
    pub actual_crossing: Option<usize>,
    pub mean_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub window: usize,
    pub events: usize,
    pub fraud_rate: Option<f64>,
    /// In-sample F1 of the scorer on the reference window, when labels exist.
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub window_days: f64,
    pub n_events: usize,
    pub dropped_tail: Option<DroppedTail>,
    pub caps: NormalizationCaps,
    pub reference: ReferenceSummary,
    pub scenarios: Vec<ScenarioReport>,
}

impl ExperimentReport {
    pub fn scenario(&self, name: &str) -> Option<&ScenarioReport> {
        self.scenarios.iter().find(|s| s.scenario == name)
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.iter().all(|s| s.rows.is_empty())
    }
}

/// When a window is assessed: its end plus the label horizon.
fn as_of(window: &MonitoringWindow, config: &Config) -> f64 {
    window.end_t + config.experiment.label_horizon_days
}

fn fully_labeled(window: &MonitoringWindow) -> bool {
    window.events.iter().all(|e| e.label.is_some())
}

fn reference_summary(reference: &MonitoringWindow, config: &Config) -> Result<ReferenceSummary> {
    let labeled: Vec<(bool, f64)> = reference
        .events
        .iter()
        .filter_map(|e| Some((e.label?, e.score?)))
        .collect();
    let f1 = if labeled.is_empty() {
        None
    } else {
        let (y, s): (Vec<bool>, Vec<f64>) = labeled.into_iter().unzip();
        Some(scorer::f1_score(&y, &s, config.scorer.threshold)?)
    };
    Ok(ReferenceSummary {
        window: reference.index,
        events: reference.len(),
        fraud_rate: reference.positive_rate(),
        f1,
    })
}

/// Assesses `windows` in order with one assessor, so carried-forward values
/// flow from window to window.
fn assess_sequence<'w>(
    scenario: &str,
    windows: impl Iterator<Item = Result<MonitoringWindow>> + 'w,
    config: &Config,
    profile: &ReferenceProfile,
    labels: &LabelTimeline,
    external: &[ProxyReading],
) -> Result<Vec<WindowRow>> {
    let mut assessor = ProxyAssessor::new(config, profile);
    let mut rows = Vec::new();
    for w in windows {
        let w = w?;
        let t = as_of(&w, config);
        let (proxy, readings) = assessor.assess(&w, labels, t, external)?;
        let mut row = WindowRow::new(scenario, &w, &proxy, &readings);
        if fully_labeled(&w) {
            let actual = engine::assess_window_actual(&w, profile.sorted_scores(), config, labels, t)?;
            row.set_actual(&actual);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn first_below(rows: &[WindowRow], th: f64, pick: impl Fn(&WindowRow) -> Option<f64>) -> Option<usize> {
    rows.iter().find(|r| pick(r).is_some_and(|s| s < th)).map(|r| r.window)
}

fn summarize(scenario: &str, mut rows: Vec<WindowRow>, baseline: Option<&[WindowRow]>, config: &Config) -> ScenarioReport {
    let th = config.status.degraded_min;
    let mut detected_windows = None;
    if let Some(base) = baseline {
        let mut n = 0;
        for (row, b) in rows.iter_mut().zip(base) {
            debug_assert_eq!(row.window, b.window);
            let hit = engine::detect_divergence(row.s_proxy, b.s_proxy, config.experiment.delta);
            row.baseline_margin = Some(b.s_proxy - row.s_proxy);
            row.detected = Some(hit);
            n += usize::from(hit);
        }
        detected_windows = Some(n);
    }
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).collect();
    let m = rows.len();
    ScenarioReport {
        scenario: scenario.to_string(),
        monitoring_windows: m,
        detection_rate: detected_windows.map(|d| if m == 0 { 0.0 } else { d as f64 / m as f64 }),
        detected_windows,
        proxy_crossing: first_below(&rows, th, |r| Some(r.s_proxy)),
        actual_crossing: first_below(&rows, th, |r| r.s_actual),
        mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        rows,
    }
}

/// Runs the scenario suite: trains the scorer on window 0, derives the
/// reference profile (calibrating caps if configured), perturbs each
/// monitoring window per scenario, rescores it, and assesses it in proxy and
/// actual mode. The baseline scenario always runs and is reported first.
pub fn run_experiment(config: &Config, source: DataSource) -> Result<ExperimentReport> {
    let events = source.load(config)?;
    let n_events = events.len();
    let labels = LabelTimeline::from_events(&events);
    let mut partition = window_partition(events, config.experiment.window_days)?;
    if partition.windows.len() < 2 {
        return Err(Error::InvalidWindow {
            index: 0,
            reason: "need a reference window and at least one monitoring window".into(),
        });
    }
    let model = scorer::train_logistic(partition.reference(), &config.scorer)?;
    partition
        .windows
        .par_iter_mut()
        .try_for_each(|w| model.score_window(w))?;
    let reference = partition.reference();
    let profile = ReferenceProfile::from_config(reference, config)?;
    let monitoring = partition.monitoring();

    let mut kinds = vec![ScenarioKind::Baseline];
    kinds.extend(ScenarioKind::ALL.into_iter().filter(|k| *k != ScenarioKind::Baseline && config.experiment.scenarios.contains(k)));

    let runs: Vec<(ScenarioKind, Vec<WindowRow>)> = kinds
        .par_iter()
        .map(|&kind| {
            let spec = ScenarioSpec::from_config(kind, &config.experiment, monitoring.len())?;
            let perturbed = monitoring.iter().enumerate().map(|(pos, w)| {
                let mut w = spec.apply(pos, w, profile.feature_std())?;
                if matches!(kind, ScenarioKind::Covariate | ScenarioKind::Mixed) {
                    model.score_window(&mut w)?;
                }
                Ok(w)
            });
            let rows = assess_sequence(kind.as_str(), perturbed, config, &profile, &labels, &[])
                .map_err(|e| Error::Other(format!("scenario {kind}: {e}")))?;
            Ok((kind, rows))
        })
        .collect::<Result<_>>()?;

    let base_rows = runs[0].1.clone();
    let scenarios = runs
        .into_iter()
        .map(|(kind, rows)| {
            let base = (kind != ScenarioKind::Baseline).then_some(base_rows.as_slice());
            summarize(kind.as_str(), rows, base, config)
        })
        .collect();
    Ok(ExperimentReport {
        seed: config.experiment.seed,
        window_days: config.experiment.window_days,
        n_events,
        dropped_tail: partition.dropped_tail.clone(),
        caps: profile.caps,
        reference: reference_summary(reference, config)?,
        scenarios,
    })
}

/// Where `monitor` gets scores from.
#[derive(Debug, Clone)]
pub enum ScoreSource {
    /// Use the scores in the stream; train on the reference if none are present.
    Auto,
    Model(LogisticModel),
}

/// Fills in scores per `scores`. Returns the model used, if any.
pub fn score_partition(partition: &mut Partition, config: &Config, scores: ScoreSource) -> Result<Option<LogisticModel>> {
    let model = match scores {
        ScoreSource::Model(m) => Some(m),
        ScoreSource::Auto => {
            let total: usize = partition.windows.iter().map(|w| w.len()).sum();
            let scored = partition.windows.iter().flat_map(|w| &w.events).filter(|e| e.score.is_some()).count();
            if scored == total {
                None
            } else if scored == 0 {
                log::info!("stream has no scores; training the scorer on window 0");
                Some(scorer::train_logistic(partition.reference(), &config.scorer)?)
            } else {
                return Err(Error::MissingScores);
            }
        }
    };
    if let Some(m) = &model {
        partition.windows.par_iter_mut().try_for_each(|w| m.score_window(w))?;
    }
    Ok(model)
}

/// Assesses an observed stream window by window. Proxy mode always runs;
/// actual mode runs for windows whose every event carries a label.
pub fn run_monitor(
    config: &Config,
    events: Vec<PredictionEvent>,
    external: &[ProxyReading],
    scores: ScoreSource,
) -> Result<ExperimentReport> {
    let n_events = events.len();
    let labels = LabelTimeline::from_events(&events);
    let mut partition = window_partition(events, config.experiment.window_days)?;
    score_partition(&mut partition, config, scores)?;
    let profile = ReferenceProfile::from_config(partition.reference(), config)?;
    let rows = assess_sequence(
        "observed",
        partition.monitoring().iter().cloned().map(Ok),
        config,
        &profile,
        &labels,
        external,
    )?;
    Ok(ExperimentReport {
        seed: config.experiment.seed,
        window_days: config.experiment.window_days,
        n_events,
        dropped_tail: partition.dropped_tail.clone(),
        caps: profile.caps,
        reference: reference_summary(partition.reference(), config)?,
        scenarios: vec![summarize("observed", rows, None, config)],
    })
}
