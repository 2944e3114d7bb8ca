//! Controlled drift scenarios and a seeded synthetic event stream.

use std::fmt;

use rand::seq::index;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SyntheticConfig};
use crate::error::{Error, Result};
use crate::model::{MonitoringWindow, PredictionEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// No perturbation.
    Baseline,
    /// Gaussian noise on selected features; labels untouched.
    Covariate,
    /// Feature noise plus symmetric label flips.
    Mixed,
    /// One-directional positive-to-negative flips; features untouched.
    ConceptPrior,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Baseline,
        ScenarioKind::Covariate,
        ScenarioKind::Mixed,
        ScenarioKind::ConceptPrior,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Baseline => "baseline",
            ScenarioKind::Covariate => "covariate",
            ScenarioKind::Mixed => "mixed",
            ScenarioKind::ConceptPrior => "concept_prior",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (expected baseline, covariate, mixed, concept_prior)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipDirection {
    PositiveToNegative,
    Symmetric,
}

/// `n` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![from],
        _ => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Deterministic sub-seed for one (scenario, window, step).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 finalizer folded over the parts
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Noise multiplier per monitoring window.
    pub noise_sigma_schedule: Vec<f64>,
    pub noise_features: Vec<usize>,
    pub flip_rate_schedule: Vec<f64>,
    /// Observed prevalence to reach per window; overrides flip rates.
    pub target_prevalence_schedule: Option<Vec<f64>>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn from_config(kind: ScenarioKind, cfg: &ExperimentConfig, n_windows: usize) -> Result<Self> {
        let zeros = vec![0.0; n_windows];
        let (sigma, flips, targets) = match kind {
            ScenarioKind::Baseline => (zeros.clone(), zeros, None),
            ScenarioKind::Covariate => (linspace(cfg.covariate_sigma[0], cfg.covariate_sigma[1], n_windows), zeros, None),
            ScenarioKind::Mixed => (
                linspace(cfg.mixed_sigma[0], cfg.mixed_sigma[1], n_windows),
                linspace(cfg.mixed_flip_rate[0], cfg.mixed_flip_rate[1], n_windows),
                None,
            ),
            ScenarioKind::ConceptPrior => (zeros.clone(), zeros, Some(cfg.concept_prior_targets.clone())),
        };
        let spec = ScenarioSpec {
            kind,
            noise_sigma_schedule: sigma,
            noise_features: cfg.noise_features.clone(),
            flip_rate_schedule: flips,
            target_prevalence_schedule: targets,
            seed: derive_seed(cfg.seed, &[kind as u64]),
        };
        spec.validate(n_windows)?;
        Ok(spec)
    }

    pub fn validate(&self, n_windows: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Other(format!("scenario {}: {m}", self.kind)));
        if self.noise_sigma_schedule.len() != n_windows || self.flip_rate_schedule.len() != n_windows {
            return bad(format!("schedules must have one entry per monitoring window ({n_windows})"));
        }
        if let Some(t) = &self.target_prevalence_schedule {
            if t.len() != n_windows {
                return bad(format!(
                    "{} prevalence targets for {n_windows} monitoring windows",
                    t.len()
                ));
            }
            if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return bad("prevalence targets must lie in [0,1]".into());
            }
        }
        if self.noise_sigma_schedule.iter().any(|s| !(*s >= 0.0)) {
            return bad("noise multipliers must be >= 0".into());
        }
        if self.flip_rate_schedule.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("flip rates must lie in [0,1]".into());
        }
        Ok(())
    }

    /// Perturbs the `position`-th monitoring window (0-based). `reference_std`
    /// holds each feature's standard deviation in the unperturbed reference window.
    pub fn apply(&self, position: usize, window: &MonitoringWindow, reference_std: &[f64]) -> Result<MonitoringWindow> {
        let seed = |step: u64| derive_seed(self.seed, &[position as u64, step]);
        match self.kind {
            ScenarioKind::Baseline => Ok(window.clone()),
            ScenarioKind::Covariate => inject_covariate(
                window,
                &self.noise_features,
                self.noise_sigma_schedule[position],
                reference_std,
                seed(0),
            ),
            ScenarioKind::Mixed => {
                let noised = inject_covariate(
                    window,
                    &self.noise_features,
                    self.noise_sigma_schedule[position],
                    reference_std,
                    seed(0),
                )?;
                inject_label_flips(&noised, self.flip_rate_schedule[position], FlipDirection::Symmetric, seed(1))
            }
            ScenarioKind::ConceptPrior => {
                let rate = match (&self.target_prevalence_schedule, window.positive_rate()) {
                    (Some(targets), Some(current)) if current > 0.0 => {
                        let target = targets[position];
                        if target >= current {
                            log::warn!(
                                "window {}: prevalence target {target} is not below current {current}; no flips",
                                window.index
                            );
                            0.0
                        } else {
                            calibrate_flip_rate(current, target)?
                        }
                    }
                    _ => self.flip_rate_schedule[position],
                };
                inject_label_flips(window, rate, FlipDirection::PositiveToNegative, seed(1))
            }
        }
    }
}

/// Adds `N(0, (sigma_mult * reference_std[f])^2)` noise to each listed feature.
pub fn inject_covariate(
    window: &MonitoringWindow,
    features: &[usize],
    sigma_mult: f64,
    reference_std: &[f64],
    seed: u64,
) -> Result<MonitoringWindow> {
    let d = window.n_features();
    if let Some(&bad) = features.iter().find(|&&f| f >= d || f >= reference_std.len()) {
        return Err(Error::Other(format!("noise feature index {bad} out of range (dimension {d})")));
    }
    if !(sigma_mult >= 0.0) {
        return Err(Error::OutOfRange {
            what: "noise multiplier",
            value: sigma_mult,
            range: "[0, inf)",
        });
    }
    let mut out = window.clone();
    if sigma_mult == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    for e in &mut out.events {
        for &f in features {
            e.features[f] += sigma_mult * reference_std[f] * z.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Flips `floor(rate * n)` labels chosen uniformly at random, where `n` counts
/// positives (one-directional mode) or all labeled events (symmetric mode).
pub fn inject_label_flips(
    window: &MonitoringWindow,
    rate: f64,
    direction: FlipDirection,
    seed: u64,
) -> Result<MonitoringWindow> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::OutOfRange {
            what: "flip rate",
            value: rate,
            range: "[0, 1]",
        });
    }
    let mut out = window.clone();
    let eligible: Vec<usize> = out
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| match direction {
            FlipDirection::PositiveToNegative => e.label == Some(true),
            FlipDirection::Symmetric => e.label.is_some(),
        })
        .map(|(i, _)| i)
        .collect();
    let k = ((rate * eligible.len() as f64).floor() as usize).min(eligible.len());
    if k == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pick in index::sample(&mut rng, eligible.len(), k) {
        let e = &mut out.events[eligible[pick]];
        e.label = e.label.map(|l| !l);
    }
    Ok(out)
}

/// Rate of positive-to-negative flips that takes prevalence from `current` to `target`.
pub fn calibrate_flip_rate(current: f64, target: f64) -> Result<f64> {
    if !(current > 0.0 && current <= 1.0) {
        return Err(Error::OutOfRange {
            what: "current prevalence",
            value: current,
            range: "(0, 1]",
        });
    }
    if !(0.0..=current).contains(&target) {
        return Err(Error::OutOfRange {
            what: "target prevalence",
            value: target,
            range: "[0, current]",
        });
    }
    Ok(1.0 - target / current)
}

/// Two-class Gaussian stream: negatives ~ N(0, I), positives shifted by
/// `class_separation` on the first `informative` features. Timestamps are
/// uniform over the span; each label arrives uniformly within
/// `label_delay_max_days` of its decision. Scores are left empty.
pub fn generate_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<Vec<PredictionEvent>> {
    if cfg.n_events == 0 || cfg.n_features == 0 || cfg.informative > cfg.n_features {
        return Err(Error::Other(format!(
            "invalid synthetic sizes: {} events, {} features, {} informative",
            cfg.n_events, cfg.n_features, cfg.informative
        )));
    }
    if !(cfg.prevalence > 0.0 && cfg.prevalence < 1.0) || !(cfg.span_days > 0.0) || !(cfg.label_delay_max_days >= 0.0)
    {
        return Err(Error::Other("invalid synthetic prevalence, span or label delay".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let mut ts: Vec<f64> = (0..cfg.n_events).map(|_| rng.random::<f64>() * cfg.span_days).collect();
    ts.sort_by(f64::total_cmp);
    let events = ts
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let positive = rng.random::<f64>() < cfg.prevalence;
            let features = (0..cfg.n_features)
                .map(|j| {
                    let shift = if positive && j < cfg.informative { cfg.class_separation } else { 0.0 };
                    z.sample(&mut rng) + shift
                })
                .collect();
            let delay = rng.random::<f64>() * cfg.label_delay_max_days;
            PredictionEvent {
                event_id: format!("e{i:07}"),
                t,
                features,
                score: None,
                label: Some(positive),
                label_arrival_t: Some(t + delay),
            }
        })
        .collect();
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{self, LogisticModel};
    use crate::stats;

    fn small_cfg(n: usize) -> SyntheticConfig {
        SyntheticConfig {
            n_events: n,
            n_features: 52,
            ..SyntheticConfig::default()
        }
    }

    fn window_of(events: Vec<PredictionEvent>) -> MonitoringWindow {
        let end = events.last().map_or(1.0, |e| e.t + 1.0);
        MonitoringWindow::new(1, 0.0, end, events).unwrap()
    }

    fn column_std(w: &MonitoringWindow) -> Vec<f64> {
        w.feature_columns()
            .unwrap()
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / c.len() as f64;
                (c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn linspace_interpolates_endpoints() {
        let s = linspace(0.3, 2.0, 5);
        let expected = [0.3, 0.725, 1.15, 1.575, 2.0];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_identity_and_seed_is_deterministic() {
        let w = window_of(generate_synthetic(&small_cfg(500), 1).unwrap());
        let std = column_std(&w);
        assert_eq!(inject_covariate(&w, &[0, 1, 2], 0.0, &std, 9).unwrap(), w);
        let a = inject_covariate(&w, &[0, 1, 2], 1.0, &std, 9).unwrap();
        let b = inject_covariate(&w, &[0, 1, 2], 1.0, &std, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, w);
        assert!(inject_covariate(&w, &[52], 1.0, &std, 9).is_err());
    }

    #[test]
    fn two_sigma_noise_moves_only_perturbed_features() {
        let reference = window_of(generate_synthetic(&small_cfg(20_000), 2).unwrap());
        let current = window_of(generate_synthetic(&small_cfg(20_000), 3).unwrap());
        let std = column_std(&reference);
        let noised = inject_covariate(&current, &[0, 1, 2], 2.0, &std, 4).unwrap();
        let (rc, cc, nc) = (
            reference.feature_columns().unwrap(),
            current.feature_columns().unwrap(),
            noised.feature_columns().unwrap(),
        );
        for f in 0..52 {
            let bins = stats::quantile_bins(&rc[f], 10).unwrap();
            let before = stats::psi(&rc[f], &cc[f], &bins).unwrap();
            let after = stats::psi(&rc[f], &nc[f], &bins).unwrap();
            if f < 3 {
                assert!(after > 0.25, "feature {f}: {after}");
            } else {
                assert_eq!(before, after);
                assert!(after < 0.01);
            }
        }
    }

    #[test]
    fn one_directional_flips_hit_target_prevalence() {
        let events = generate_synthetic(
            &SyntheticConfig {
                n_events: 10_000,
                n_features: 2,
                informative: 1,
                ..SyntheticConfig::default()
            },
            5,
        )
        .unwrap();
        let w = window_of(events);
        let n = w.len() as f64;
        let n_pos = (w.positive_rate().unwrap() * n).round();
        for f in [0.0, 0.1, 0.5, 0.9429, 1.0] {
            let flipped = inject_label_flips(&w, f, FlipDirection::PositiveToNegative, 6).unwrap();
            let got = (flipped.positive_rate().unwrap() * n).round();
            let expected = n_pos * (1.0 - f);
            assert!((got - expected).abs() <= 1.0, "f={f}: {got} vs {expected}");
            for (a, b) in w.events.iter().zip(&flipped.events) {
                assert_eq!(a.features, b.features);
                assert!(!(a.label == Some(false) && b.label == Some(true)));
            }
        }
        assert_eq!(inject_label_flips(&w, 0.0, FlipDirection::Symmetric, 1).unwrap(), w);
        assert!(inject_label_flips(&w, 1.5, FlipDirection::Symmetric, 1).is_err());
    }

    #[test]
    fn symmetric_flips_count() {
        let w = window_of(generate_synthetic(&small_cfg(1000), 8).unwrap());
        let flipped = inject_label_flips(&w, 0.3, FlipDirection::Symmetric, 2).unwrap();
        let changed = w.events.iter().zip(&flipped.events).filter(|(a, b)| a.label != b.label).count();
        assert_eq!(changed, 300);
    }

    #[test]
    fn flip_rate_calibration() {
        assert!((calibrate_flip_rate(0.035, 0.002).unwrap() - 0.9429).abs() < 1e-4);
        assert_eq!(calibrate_flip_rate(0.035, 0.035).unwrap(), 0.0);
        assert_eq!(calibrate_flip_rate(0.035, 0.0).unwrap(), 1.0);
        assert!(calibrate_flip_rate(0.035, 0.04).is_err());
    }

    #[test]
    fn realized_prevalence_concentrates() {
        let cfg = SyntheticConfig {
            n_events: 100_000,
            n_features: 3,
            informative: 1,
            ..SyntheticConfig::default()
        };
        let events = generate_synthetic(&cfg, 7).unwrap();
        let rate = events.iter().filter(|e| e.label == Some(true)).count() as f64 / 1e5;
        assert!((rate - 0.035).abs() < 0.002, "{rate}");
        assert!(events.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(events.iter().all(|e| e.validate().is_ok() && e.t < 180.0));
    }

    #[test]
    fn no_separation_gives_no_better_than_chance_f1() {
        let cfg = SyntheticConfig {
            n_events: 20_000,
            n_features: 5,
            informative: 5,
            class_separation: 0.0,
            prevalence: 0.2,
            ..SyntheticConfig::default()
        };
        let train = window_of(generate_synthetic(&cfg, 10).unwrap());
        let test = window_of(generate_synthetic(&cfg, 11).unwrap());
        let model = scorer::train_logistic(&train, &Default::default()).unwrap();
        let labels: Vec<bool> = test.events.iter().map(|e| e.label.unwrap()).collect();
        let scores: Vec<f64> = test.events.iter().map(|e| model.predict(&e.features).unwrap()).collect();
        let f1 = scorer::f1_score(&labels, &scores, 0.5).unwrap();
        // Random coin-flip scorer: precision = prevalence, recall = 1/2.
        let p = 0.2;
        let random_f1 = 2.0 * p * 0.5 / (p + 0.5);
        assert!((f1 - random_f1).abs() < 0.05, "{f1} vs {random_f1}");
        // and a separable stream does much better
        let sep = SyntheticConfig {
            class_separation: 2.0,
            ..cfg
        };
        let m2 = scorer::train_logistic(&window_of(generate_synthetic(&sep, 12).unwrap()), &Default::default()).unwrap();
        let t2 = window_of(generate_synthetic(&sep, 13).unwrap());
        let l2: Vec<bool> = t2.events.iter().map(|e| e.label.unwrap()).collect();
        let s2: Vec<f64> = t2.events.iter().map(|e| m2.predict(&e.features).unwrap()).collect();
        assert!(scorer::f1_score(&l2, &s2, 0.5).unwrap() > random_f1 + 0.2);
        let _ = LogisticModel::zero(1);
    }

    #[test]
    fn scenario_schedules() {
        let cfg = ExperimentConfig::default();
        let cov = ScenarioSpec::from_config(ScenarioKind::Covariate, &cfg, 5).unwrap();
        assert!((cov.noise_sigma_schedule[1] - 0.725).abs() < 1e-12);
        let mixed = ScenarioSpec::from_config(ScenarioKind::Mixed, &cfg, 5).unwrap();
        assert!((mixed.flip_rate_schedule[4] - 0.30).abs() < 1e-12);
        assert!(ScenarioSpec::from_config(ScenarioKind::ConceptPrior, &cfg, 4).is_err());
    }

    #[test]
    fn concept_prior_keeps_features_bit_identical() {
        let w = window_of(generate_synthetic(&small_cfg(3000), 14).unwrap());
        let spec = ScenarioSpec::from_config(ScenarioKind::ConceptPrior, &ExperimentConfig::default(), 5).unwrap();
        let std = column_std(&w);
        for pos in 0..5 {
            let out = spec.apply(pos, &w, &std).unwrap();
            for (a, b) in w.events.iter().zip(&out.events) {
                assert_eq!(a.features, b.features);
                assert_eq!(a.score, b.score);
                assert_eq!(a.label_arrival_t, b.label_arrival_t);
            }
        }
    }
}
