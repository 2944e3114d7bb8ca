//! Event stream ingestion and export (CSV and JSONL), plus external proxy
//! signal files.
//!
//! Event columns: `event_id`, `t`, `score` (optional), `label` (optional,
//! 0/1), `label_arrival_t` (optional), then `f_0 .. f_{k-1}`. Empty CSV cells
//! and JSON nulls mean "absent".

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::ProxyCategory;
use crate::error::{Error, Result};
use crate::model::PredictionEvent;
use crate::proxy::ProxyReading;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    #[default]
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Csv => "csv",
            DataFormat::Jsonl => "jsonl",
        })
    }
}

impl std::str::FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(format!("unknown format '{other}' (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Sort out-of-order input instead of rejecting it.
    pub allow_unsorted: bool,
}

struct RowParser<'a> {
    path: &'a str,
}

impl RowParser<'_> {
    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line,
            reason: reason.into(),
        }
    }

    fn number(&self, line: usize, col: &str, s: &str) -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| self.err(line, format!("column {col}: '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(line, format!("column {col}: '{s}' is not finite")));
        }
        Ok(v)
    }

    fn opt_number(&self, line: usize, col: &str, s: Option<&str>) -> Result<Option<f64>> {
        match s.map(str::trim) {
            None | Some("") => Ok(None),
            Some(v) => self.number(line, col, v).map(Some),
        }
    }

    fn opt_label(&self, line: usize, s: Option<&str>) -> Result<Option<bool>> {
        match s.map(str::trim) {
            None | Some("") => Ok(None),
            Some("1") | Some("true") => Ok(Some(true)),
            Some("0") | Some("false") => Ok(Some(false)),
            Some(other) => Err(self.err(line, format!("column label: '{other}' is not 0/1"))),
        }
    }

    fn finish(&self, line: usize, e: PredictionEvent) -> Result<PredictionEvent> {
        e.validate().map_err(|err| self.err(line, err.to_string()))?;
        Ok(e)
    }
}

/// Column positions of the feature columns `f_0..f_{k-1}`, in order.
fn feature_columns<'a>(names: impl Iterator<Item = (usize, &'a str)>) -> std::result::Result<Vec<usize>, String> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (pos, name) in names {
        if let Some(idx) = name.strip_prefix("f_") {
            let i: usize = idx.parse().map_err(|_| format!("bad feature column '{name}'"))?;
            found.push((i, pos));
        }
    }
    found.sort();
    for (expect, (i, _)) in found.iter().enumerate() {
        if *i != expect {
            return Err(format!("feature columns must be f_0..f_{{k-1}} without gaps; missing f_{expect}"));
        }
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn read_csv(path: &Path) -> Result<Vec<PredictionEvent>> {
    let label = path.display().to_string();
    let p = RowParser { path: &label };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| p.err(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, t_col) = match (col("event_id"), col("t")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(p.err(1, "missing required column event_id or t")),
    };
    let (score_col, label_col, arrival_col) = (col("score"), col("label"), col("label_arrival_t"));
    let features = feature_columns(headers.iter().enumerate()).map_err(|m| p.err(1, m))?;

    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line() as usize);
            p.err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |pos| pos.line() as usize);
        let get = |c: Option<usize>| c.and_then(|i| rec.get(i));
        let features = features
            .iter()
            .enumerate()
            .map(|(i, &c)| p.number(line, &format!("f_{i}"), rec.get(c).unwrap_or("")))
            .collect::<Result<Vec<f64>>>()?;
        let e = PredictionEvent {
            event_id: rec.get(id_col).unwrap_or("").to_string(),
            t: p.number(line, "t", rec.get(t_col).unwrap_or(""))?,
            features,
            score: p.opt_number(line, "score", get(score_col))?,
            label: p.opt_label(line, get(label_col))?,
            label_arrival_t: p.opt_number(line, "label_arrival_t", get(arrival_col))?,
        };
        events.push(p.finish(line, e)?);
    }
    Ok(events)
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Bool(b) => Some(if *b { "1".into() } else { "0".into() }),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn read_jsonl(path: &Path) -> Result<Vec<PredictionEvent>> {
    let label = path.display().to_string();
    let p = RowParser { path: &label };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| p.err(n, e.to_string()))?;
        let field = |k: &str| obj.get(k).and_then(json_scalar);
        let features_at = feature_columns(obj.keys().enumerate().map(|(i, k)| (i, k.as_str()))).map_err(|m| p.err(n, m))?;
        let keys: Vec<&String> = obj.keys().collect();
        let features = features_at
            .iter()
            .enumerate()
            .map(|(fi, &pos)| {
                let raw = obj.get(keys[pos]).and_then(json_scalar).unwrap_or_default();
                p.number(n, &format!("f_{fi}"), &raw)
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(features.len()),
            Some(w) if w != features.len() => {
                return Err(p.err(n, format!("expected {w} features, found {}", features.len())))
            }
            _ => {}
        }
        let id = field("event_id").ok_or_else(|| p.err(n, "missing required field event_id"))?;
        let t = field("t").ok_or_else(|| p.err(n, "missing required field t"))?;
        let e = PredictionEvent {
            event_id: id,
            t: p.number(n, "t", &t)?,
            features,
            score: p.opt_number(n, "score", field("score").as_deref())?,
            label: p.opt_label(n, field("label").as_deref())?,
            label_arrival_t: p.opt_number(n, "label_arrival_t", field("label_arrival_t").as_deref())?,
        };
        events.push(p.finish(n, e)?);
    }
    Ok(events)
}

/// Reads and validates an event file. Output is ordered by `t`.
pub fn ingest(path: impl AsRef<Path>, format: DataFormat, opts: IngestOptions) -> Result<Vec<PredictionEvent>> {
    let path = path.as_ref();
    let mut events = match format {
        DataFormat::Csv => read_csv(path)?,
        DataFormat::Jsonl => read_jsonl(path)?,
    };
    if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
        if opts.allow_unsorted {
            events.sort_by(|a, b| a.t.total_cmp(&b.t));
        } else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 0,
                reason: format!(
                    "events out of time order at event {} (t={} after t={})",
                    events[i + 1].event_id,
                    events[i + 1].t,
                    events[i].t
                ),
            });
        }
    }
    Ok(events)
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes events in the ingestion column contract.
pub fn write_events(path: impl AsRef<Path>, events: &[PredictionEvent], format: DataFormat) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let d = events.first().map_or(0, |e| e.features.len());
    let io = |e| Error::io(path, e);
    match format {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["event_id".to_string(), "t".into(), "score".into(), "label".into(), "label_arrival_t".into()];
            header.extend((0..d).map(|i| format!("f_{i}")));
            w.write_record(&header).map_err(|e| Error::Other(e.to_string()))?;
            for e in events {
                let mut row = vec![
                    e.event_id.clone(),
                    e.t.to_string(),
                    opt_to_string(e.score),
                    e.label.map(|l| u8::from(l).to_string()).unwrap_or_default(),
                    opt_to_string(e.label_arrival_t),
                ];
                row.extend(e.features.iter().map(|x| x.to_string()));
                w.write_record(&row).map_err(|e| Error::Other(e.to_string()))?;
            }
            w.flush().map_err(io)?;
        }
        DataFormat::Jsonl => {
            for e in events {
                let mut obj = Map::new();
                obj.insert("event_id".into(), Value::from(e.event_id.clone()));
                obj.insert("t".into(), Value::from(e.t));
                obj.insert("score".into(), e.score.map_or(Value::Null, Value::from));
                obj.insert("label".into(), e.label.map_or(Value::Null, |l| Value::from(u8::from(l))));
                obj.insert("label_arrival_t".into(), e.label_arrival_t.map_or(Value::Null, Value::from));
                for (i, x) in e.features.iter().enumerate() {
                    obj.insert(format!("f_{i}"), Value::from(*x));
                }
                serde_json::to_writer(&mut out, &obj).map_err(|e| Error::Other(e.to_string()))?;
                out.write_all(b"\n").map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

/// Reads externally computed proxy health signals: columns `window_index`,
/// `category` (one of the non-built-in categories) and `health` in `[0, 1]`.
pub fn read_signals(path: impl AsRef<Path>, format: DataFormat) -> Result<Vec<ProxyReading>> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let p = RowParser { path: &label };
    let mut rows: Vec<(usize, String, String, String)> = Vec::new();
    match format {
        DataFormat::Csv => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
            let headers = rdr.headers().map_err(|e| p.err(1, e.to_string()))?.clone();
            let col = |n: &str| headers.iter().position(|h| h == n).ok_or_else(|| p.err(1, format!("missing column {n}")));
            let (wi, ca, he) = (col("window_index")?, col("category")?, col("health")?);
            for rec in rdr.records() {
                let rec = rec.map_err(|e| p.err(0, e.to_string()))?;
                let line = rec.position().map_or(0, |pos| pos.line() as usize);
                let g = |i: usize| rec.get(i).unwrap_or("").to_string();
                rows.push((line, g(wi), g(ca), g(he)));
            }
        }
        DataFormat::Jsonl => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| p.err(i + 1, e.to_string()))?;
                let g = |k: &str| obj.get(k).and_then(json_scalar).unwrap_or_default();
                rows.push((i + 1, g("window_index"), g("category"), g("health")));
            }
        }
    }
    rows.into_iter()
        .map(|(line, w, c, h)| {
            let window: usize = w.trim().parse().map_err(|_| p.err(line, format!("bad window_index '{w}'")))?;
            let category: ProxyCategory = c.trim().parse().map_err(|m: String| p.err(line, m))?;
            if category.is_builtin() {
                return Err(p.err(line, format!("{category} is computed internally and cannot be supplied")));
            }
            let health = p.number(line, "health", &h)?;
            ProxyReading::external(category, health, window).map_err(|e| p.err(line, e.to_string()))
        })
        .collect()
}
