//! Writing reports to disk. Text tables are tab-separated and rounded to
//! three decimals; machine rows are JSONL at full precision.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::runner::{ExperimentReport, ScenarioReport, WindowRow};
use crate::simulator::SimulationTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportFormats {
    pub text: bool,
    pub machine: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats { text: true, machine: true }
    }
}

const ROW_HEADER: &str = "scenario\twindow\tfraud_rate\tp_scr\tp_fea\tp_unc\tr_proxy\tp_proxy\ta_proxy\ts_proxy\ts_actual\tstatus\t\
completeness\tfreshness\tr_actual\tp_actual\ta_actual\tstatus_actual\tgap\tdetected";

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn opt3(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), f3)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

fn row_line(r: &WindowRow) -> String {
    [
        r.scenario.clone(),
        r.window.to_string(),
        opt3(r.fraud_rate),
        f3(r.p_scr),
        f3(r.p_fea),
        f3(r.p_unc),
        f3(r.r_proxy),
        f3(r.p_proxy),
        f3(r.a_proxy),
        f3(r.s_proxy),
        opt3(r.s_actual),
        r.status.clone(),
        f3(r.completeness),
        f3(r.freshness),
        opt3(r.r_actual),
        opt3(r.p_actual),
        opt3(r.a_actual),
        opt(r.status_actual.clone()),
        opt3(r.gap),
        opt(r.detected.map(|d| if d { "yes" } else { "no" })),
    ]
    .join("\t")
}

/// Per-window table for one scenario.
pub fn scenario_table(s: &ScenarioReport) -> String {
    let mut out = format!("{ROW_HEADER}\n");
    for r in &s.rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    out
}

/// Detection rates and crossings, one line per scenario.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "scenario\tmonitoring_windows\tdetected_windows\tdetection_rate\tproxy_crossing\tactual_crossing\tmean_gap\n",
    );
    for s in &report.scenarios {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.scenario,
            s.monitoring_windows,
            opt(s.detected_windows),
            opt3(s.detection_rate),
            opt(s.proxy_crossing),
            opt(s.actual_crossing),
            opt3(s.mean_gap),
        )
        .unwrap();
    }
    out
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).map_err(|e| Error::Other(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Machine-readable summary: a run record followed by one record per scenario.
pub fn summary_jsonl(report: &ExperimentReport) -> Result<String> {
    let mut records = vec![json!({
        "record": "run",
        "seed": report.seed,
        "window_days": report.window_days,
        "n_events": report.n_events,
        "dropped_tail": report.dropped_tail,
        "caps": report.caps,
        "reference": report.reference,
    })];
    for s in &report.scenarios {
        records.push(json!({
            "record": "scenario",
            "scenario": s.scenario,
            "monitoring_windows": s.monitoring_windows,
            "detected_windows": s.detected_windows,
            "detection_rate": s.detection_rate,
            "proxy_crossing": s.proxy_crossing,
            "actual_crossing": s.actual_crossing,
            "mean_gap": s.mean_gap,
        }));
    }
    jsonl(records)
}

/// Every window row across scenarios, in report order.
pub fn rows_jsonl(report: &ExperimentReport) -> Result<String> {
    jsonl(report.scenarios.iter().flat_map(|s| &s.rows))
}

/// Writes `files` under `out_dir`. Nothing is written if any target exists
/// and `overwrite` is off.
pub fn write_outputs(out_dir: &Path, files: &[(String, String)], overwrite: bool) -> Result<Vec<PathBuf>> {
    if files.is_empty() {
        return Err(Error::Other("nothing to emit".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths: Vec<PathBuf> = files.iter().map(|(name, _)| out_dir.join(name)).collect();
    if !overwrite {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(p.clone()));
        }
    }
    for (path, (_, body)) in paths.iter().zip(files) {
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(paths)
}

/// Emits `<scenario>.tsv` per scenario plus `summary.tsv` (text), and
/// `rows.jsonl` plus `summary.jsonl` (machine).
pub fn emit_report(
    report: &ExperimentReport,
    out_dir: impl AsRef<Path>,
    formats: ReportFormats,
    overwrite: bool,
) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(Error::Other("report has no rows; nothing to emit".into()));
    }
    let mut files = Vec::new();
    if formats.text {
        for s in &report.scenarios {
            files.push((format!("{}.tsv", s.scenario), scenario_table(s)));
        }
        files.push(("summary.tsv".into(), summary_table(report)));
    }
    if formats.machine {
        files.push(("rows.jsonl".into(), rows_jsonl(report)?));
        files.push(("summary.jsonl".into(), summary_jsonl(report)?));
    }
    write_outputs(out_dir.as_ref(), &files, overwrite)
}

/// Emits one `<drift>.tsv` trajectory per run, `crossings.tsv`, and
/// `trajectories.jsonl`.
pub fn emit_simulation(
    runs: &[SimulationTrajectory],
    out_dir: impl AsRef<Path>,
    formats: ReportFormats,
    overwrite: bool,
) -> Result<Vec<PathBuf>> {
    if runs.is_empty() {
        return Err(Error::Other("no trajectories; nothing to emit".into()));
    }
    let mut files = Vec::new();
    if formats.text {
        for t in runs {
            files.push((format!("{}.tsv", t.drift), t.to_tsv()));
        }
        let mut crossings = String::from("drift\tthreshold\tfirst_day_below\n");
        for t in runs {
            for (th, day) in &t.crossing_days {
                writeln!(crossings, "{}\t{th}\t{}", t.drift, opt(*day)).unwrap();
            }
        }
        files.push(("crossings.tsv".into(), crossings));
    }
    if formats.machine {
        let records = runs.iter().flat_map(|t| {
            t.points.iter().map(move |p| {
                json!({
                    "drift": t.drift,
                    "day": p.day,
                    "completeness": p.dims.completeness,
                    "freshness": p.dims.freshness,
                    "reliability": p.dims.reliability,
                    "representativeness": p.dims.representativeness,
                    "gate": p.gate,
                    "score": p.score,
                    "status": p.status,
                })
            })
        });
        files.push(("trajectories.jsonl".into(), jsonl(records)?));
    }
    write_outputs(out_dir.as_ref(), &files, overwrite)
}
