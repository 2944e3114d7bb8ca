use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evsuff_core::config::CapsMode;
use evsuff_core::injection::{self, ScenarioKind};
use evsuff_core::io::{self, DataFormat, IngestOptions};
use evsuff_core::proxy;
use evsuff_core::report::{self, ReportFormats};
use evsuff_core::runner::{self, DataSource, ScoreSource};
use evsuff_core::scorer::LogisticModel;
use evsuff_core::simulator::{self, DriftType, SimulationSpec};
use evsuff_core::{Config, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "evsuff", version, about = "Evidence-sufficiency monitoring under delayed labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `experiment.window_days`.
    #[arg(long, global = true)]
    window_days: Option<f64>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    overwrite: bool,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Skip the tab-separated tables.
    #[arg(long)]
    no_text: bool,
    /// Skip the JSONL rows.
    #[arg(long)]
    no_machine: bool,
}

impl OutputArgs {
    fn formats(&self) -> ReportFormats {
        ReportFormats {
            text: !self.no_text,
            machine: !self.no_machine,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Event file (CSV or JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Input encoding; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<DataFormat>,
    /// Sort out-of-order events instead of rejecting the file.
    #[arg(long)]
    sort: bool,
}

impl InputArgs {
    fn format(&self) -> DataFormat {
        self.format.unwrap_or_else(|| DataFormat::from_path(&self.input))
    }

    fn read(&self) -> Result<Vec<evsuff_core::PredictionEvent>> {
        io::ingest(&self.input, self.format(), IngestOptions { allow_unsorted: self.sort })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assess an observed event stream window by window.
    Monitor {
        #[command(flatten)]
        input: InputArgs,
        /// Externally computed proxy signals (window_index, category, health).
        #[arg(long)]
        signals: Option<PathBuf>,
        /// Scorer to apply instead of the stream's own scores.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run the drift-injection scenario suite.
    Experiment {
        /// Event file; a synthetic stream is generated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<DataFormat>,
        #[arg(long)]
        sort: bool,
        /// Scenario to run (repeatable). The baseline always runs.
        #[arg(long = "scenario")]
        scenarios: Vec<ScenarioKind>,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Project sufficiency over a blind period with no new labels.
    Simulate {
        /// Drift regime (repeatable); all four when omitted.
        #[arg(long = "drift")]
        drifts: Vec<DriftType>,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate normalization caps on a stream's reference window and write
    /// a config that uses them.
    Calibrate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Where to write the resulting config; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic event stream.
    Gen {
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<DataFormat>,
        /// Overrides `synthetic.n_events`.
        #[arg(long)]
        n_events: Option<usize>,
        /// Write scores from a scorer trained on window 0.
        #[arg(long)]
        scored: bool,
        /// With --scored, also save the trained scorer for `monitor --model`.
        #[arg(long, requires = "scored")]
        save_model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            Config::from_toml_str(&text)?
        }
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.experiment.seed = seed;
    }
    if let Some(w) = common.window_days {
        config.experiment.window_days = w;
    }
    config.validate()
}

fn refuse_existing(path: &Path, overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        return Err(Error::WouldOverwrite(path.to_path_buf()));
    }
    Ok(())
}

fn score_source(model: &Option<PathBuf>) -> Result<ScoreSource> {
    Ok(match model {
        Some(p) => ScoreSource::Model(LogisticModel::load(p)?),
        None => ScoreSource::Auto,
    })
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Monitor {
            input,
            signals,
            model,
            output,
            common,
        } => {
            let config = load_config(&common)?;
            let events = input.read()?;
            let external = match &signals {
                Some(p) => io::read_signals(p, DataFormat::from_path(p))?,
                None => Vec::new(),
            };
            let report = runner::run_monitor(&config, events, &external, score_source(&model)?)?;
            for row in &report.scenarios[0].rows {
                println!("window {}: S_proxy={:.3} {}", row.window, row.s_proxy, row.status);
            }
            print_paths(&report::emit_report(&report, &output.out, output.formats(), common.overwrite)?);
        }
        Command::Experiment {
            input,
            format,
            sort,
            scenarios,
            output,
            common,
        } => {
            let mut config = load_config(&common)?;
            if !scenarios.is_empty() {
                config.experiment.scenarios = scenarios;
            }
            let source = match input {
                Some(path) => DataSource::File {
                    format: format.unwrap_or_else(|| DataFormat::from_path(&path)),
                    path,
                    allow_unsorted: sort,
                },
                None => DataSource::Synthetic,
            };
            let report = runner::run_experiment(&config, source)?;
            for s in &report.scenarios {
                match (s.detected_windows, s.detection_rate) {
                    (Some(d), Some(rate)) => println!(
                        "{}: detected {d}/{} ({:.0}%)",
                        s.scenario,
                        s.monitoring_windows,
                        rate * 100.0
                    ),
                    _ => println!("{}: comparator", s.scenario),
                }
            }
            print_paths(&report::emit_report(&report, &output.out, output.formats(), common.overwrite)?);
        }
        Command::Simulate { drifts, output, common } => {
            let config = load_config(&common)?;
            let drifts = if drifts.is_empty() { DriftType::ALL.to_vec() } else { drifts };
            let runs = drifts
                .into_iter()
                .map(|d| simulator::simulate(&SimulationSpec::from_config(&config, d), &config))
                .collect::<Result<Vec<_>>>()?;
            for t in &runs {
                let th = config.status.degraded_min;
                match simulator::threshold_crossing(t, th) {
                    Some(day) => println!("{}: S < {th} from day {day}", t.drift),
                    None => println!("{}: S stays >= {th}", t.drift),
                }
            }
            print_paths(&report::emit_simulation(&runs, &output.out, output.formats(), common.overwrite)?);
        }
        Command::Calibrate {
            input,
            model,
            out,
            common,
        } => {
            let mut config = load_config(&common)?;
            let events = input.read()?;
            let mut partition = runner::window_partition(events, config.experiment.window_days)?;
            runner::score_partition(&mut partition, &config, score_source(&model)?)?;
            config.caps = proxy::calibrate_caps(
                partition.reference(),
                &config.calibration,
                &config.binning,
                config.proxy.feature_aggregate,
            )?;
            config.calibration.mode = CapsMode::Fixed;
            let text = config.to_toml_string();
            match out {
                Some(path) => {
                    refuse_existing(&path, common.overwrite)?;
                    std::fs::write(&path, text).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let c = &config.caps;
                    println!(
                        "caps: psi={:.4} fpsi={:.4} ent={:.4} conf={:.4}",
                        c.psi_cap, c.fpsi_cap, c.ent_cap, c.conf_cap
                    );
                    print_paths(&[path]);
                }
                None => print!("{text}"),
            }
        }
        Command::Gen {
            out,
            format,
            n_events,
            scored,
            save_model,
            common,
        } => {
            let mut config = load_config(&common)?;
            if let Some(n) = n_events {
                config.synthetic.n_events = n;
            }
            let config = config.validate()?;
            refuse_existing(&out, common.overwrite)?;
            let mut events = injection::generate_synthetic(&config.synthetic, config.experiment.seed)?;
            if scored {
                let mut partition = runner::window_partition(events, config.experiment.window_days)?;
                let model = runner::score_partition(&mut partition, &config, ScoreSource::Auto)?;
                if let (Some(path), Some(m)) = (&save_model, &model) {
                    refuse_existing(path, common.overwrite)?;
                    m.save(path)?;
                    println!("wrote scorer to {}", path.display());
                }
                let tail_start = partition.windows.last().map_or(0.0, |w| w.end_t);
                if partition.dropped_tail.is_some() {
                    log::warn!("events from t={tail_start} on fall outside complete windows and are not written");
                }
                events = partition.windows.into_iter().flat_map(|w| w.events).collect();
            }
            io::write_events(&out, &events, format.unwrap_or_else(|| DataFormat::from_path(&out)))?;
            println!("wrote {} events to {}", events.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
