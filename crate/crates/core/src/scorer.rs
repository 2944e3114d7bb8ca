//! Class-balanced logistic regression and F1.
//!
//! Training is full-batch gradient descent from a zero start, so a given
//! window and configuration always produce the same model.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::ScorerConfig;
use crate::error::{Error, Result};
use crate::model::MonitoringWindow;

const MODEL_HEADER: &str = "evsuff-logistic v1";
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// Coefficients on standardized inputs; zero for dropped features.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// False for constant training features, which are ignored.
    pub active: Vec<bool>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    /// A model with zero weights and bias, predicting 0.5 everywhere.
    pub fn zero(n_features: usize) -> Self {
        LogisticModel {
            weights: vec![0.0; n_features],
            bias: 0.0,
            means: vec![0.0; n_features],
            stds: vec![1.0; n_features],
            active: vec![true; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        for (i, xi) in x.iter().enumerate() {
            if self.active[i] {
                z += self.weights[i] * (xi - self.means[i]) / self.stds[i];
            }
        }
        z
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(sigmoid(self.logit(x)))
    }

    /// Writes a score onto every event of the window.
    pub fn score_window(&self, window: &mut MonitoringWindow) -> Result<()> {
        for e in &mut window.events {
            e.score = Some(self.predict(&e.features)?);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        writeln!(s, "{MODEL_HEADER}").unwrap();
        writeln!(s, "n_features {}", self.n_features()).unwrap();
        writeln!(s, "bias {}", self.bias).unwrap();
        writeln!(s, "weights {}", join(&self.weights)).unwrap();
        writeln!(s, "means {}", join(&self.means)).unwrap();
        writeln!(s, "stds {}", join(&self.stds)).unwrap();
        let active: Vec<&str> = self.active.iter().map(|&a| if a { "1" } else { "0" }).collect();
        writeln!(s, "active {}", active.join(" ")).unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            path: "<model>".into(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == MODEL_HEADER => {}
            _ => return Err(err(1, format!("expected header '{MODEL_HEADER}'"))),
        }
        let mut field = |name: &str| -> Result<(usize, Vec<String>)> {
            let (i, line) = lines.next().ok_or_else(|| err(0, format!("missing '{name}' line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(err(i + 1, format!("expected '{name}'")));
            }
            Ok((i + 1, parts.map(str::to_string).collect()))
        };
        let floats = |(line, v): (usize, Vec<String>)| -> Result<Vec<f64>> {
            v.iter()
                .map(|x| x.parse::<f64>().map_err(|e| err(line, format!("{x}: {e}"))))
                .collect()
        };
        let (line, n) = field("n_features")?;
        let n: usize = n
            .first()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| err(line, "bad n_features".into()))?;
        let bias = floats(field("bias")?)?;
        let weights = floats(field("weights")?)?;
        let means = floats(field("means")?)?;
        let stds = floats(field("stds")?)?;
        let (line, act) = field("active")?;
        let active = act
            .iter()
            .map(|a| match a.as_str() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(err(line, format!("bad active flag '{other}'"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        if bias.len() != 1 || [weights.len(), means.len(), stds.len(), active.len()].iter().any(|&l| l != n) {
            return Err(err(0, "field lengths disagree with n_features".into()));
        }
        if stds.iter().zip(&active).any(|(&s, &a)| a && !(s > 0.0)) {
            return Err(err(0, "active feature with non-positive stddev".into()));
        }
        Ok(LogisticModel {
            weights,
            bias: bias[0],
            means,
            stds,
            active,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LogisticModel::from_text(&text)
    }
}

/// Scores for each row of `features`.
pub fn predict_proba(model: &LogisticModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    features.iter().map(|x| model.predict(x)).collect()
}

/// Fits a logistic regression on the labeled events of `train`, weighting
/// each class by `n / (2 * n_class)`.
pub fn train_logistic(train: &MonitoringWindow, hp: &ScorerConfig) -> Result<LogisticModel> {
    let rows: Vec<(&[f64], bool)> = train
        .events
        .iter()
        .filter_map(|e| e.label.map(|l| (e.features.as_slice(), l)))
        .collect();
    let skipped = train.len() - rows.len();
    if skipped > 0 {
        log::warn!("training skips {skipped} unlabeled events");
    }
    let x: Vec<&[f64]> = rows.iter().map(|r| r.0).collect();
    let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
    fit(&x, &y, hp)
}

pub fn fit(x: &[&[f64]], y: &[bool], hp: &ScorerConfig) -> Result<LogisticModel> {
    let n = x.len();
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if x.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Other("training features must be finite".into()));
    }

    let nf = n as f64;
    let mut means = vec![0.0; d];
    for r in x {
        for (m, v) in means.iter_mut().zip(*r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= nf);
    let mut stds = vec![0.0; d];
    for r in x {
        for j in 0..d {
            stds[j] += (r[j] - means[j]).powi(2);
        }
    }
    let mut active = vec![true; d];
    for j in 0..d {
        stds[j] = (stds[j] / nf).sqrt();
        if stds[j] < MIN_STD {
            log::warn!("feature f_{j} is constant in training data; dropped");
            active[j] = false;
            stds[j] = 1.0;
        }
    }

    let z: Vec<f64> = x
        .iter()
        .flat_map(|r| (0..d).map(|j| if active[j] { (r[j] - means[j]) / stds[j] } else { 0.0 }))
        .collect();
    let w_pos = nf / (2.0 * n_pos as f64);
    let w_neg = nf / (2.0 * (n - n_pos) as f64);

    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..hp.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (i, &label) in y.iter().enumerate() {
            let row = &z[i * d..(i + 1) * d];
            let logit = bias + row.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
            let (target, cw) = if label { (1.0, w_pos) } else { (0.0, w_neg) };
            let err = cw * (sigmoid(logit) - target);
            grad_b += err;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += err * v;
            }
        }
        for j in 0..d {
            weights[j] -= hp.learning_rate * (grad[j] / nf + hp.l2 * weights[j]);
        }
        bias -= hp.learning_rate * grad_b / nf;
    }
    Ok(LogisticModel {
        weights,
        bias,
        means,
        stds,
        active,
    })
}

/// F1 at `score >= threshold`; 0 when there are no predicted or no true positives.
pub fn f1_score(labels: &[bool], scores: &[f64], threshold: f64) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptySample { what: "f1_score" });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&l, &s) in labels.iter().zip(scores) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let tp = tp as f64;
    Ok(2.0 * tp / (2.0 * tp + fp as f64 + fn_ as f64))
}
