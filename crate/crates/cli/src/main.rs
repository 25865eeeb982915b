use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;
use yuoh_core::dataset::{read_dataset_file, write_dataset_file, LoadedDataset};
use yuoh_core::detection::{fit_poisson_mixture, CountHistogram};
use yuoh_core::diagnostics::{signaling_ensemble, Direction};
use yuoh_core::graph::DEFAULT_EPS_THRESHOLD;
use yuoh_core::memory::occupancy;
use yuoh_core::rays::ray_table_json;
use yuoh_core::report::{
    analyze, correlators_csv, diagnostics, eps_csv, histograms_csv, memory_states_csv, reconstruction, signaling_csv,
    tally_for, AnalysisOptions, MemoryReport, Provenance, REPORT_SCHEMA,
};
use yuoh_core::sim::{DEFAULT_MIN_LEN, DEFAULT_PURGE_RUN};
use yuoh_core::{run_campaign, CampaignOptions, ConfigError, DatasetError, FitError, NoiseConfig, StatsError};

#[derive(Parser)]
#[command(name = "yuoh", version, about = "Sequential Yu-Oh contextuality simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a campaign and write it as a dataset file.
    Simulate {
        /// Minimum number of analyzed (non-purged) records.
        #[arg(long)]
        total: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Noise configuration JSON; defaults to the built-in noisy model.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Use the noiseless model instead of a configuration file.
        #[arg(long, conflicts_with = "noise")]
        ideal: bool,
        #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
        min_len: usize,
        #[arg(long, default_value_t = DEFAULT_PURGE_RUN)]
        purge_run_length: usize,
        out: PathBuf,
    },
    /// Full analysis report of a dataset.
    Analyze {
        dataset: PathBuf,
        /// Photon threshold overriding the one stored in the dataset header
        #[arg(long)]
        threshold: Option<f64>,
        /// Count each segment in this many stitched shards.
        #[arg(long, default_value_t = 1)]
        shards: usize,
        #[arg(long, default_value_t = DEFAULT_EPS_THRESHOLD)]
        eps_threshold: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Directory for CSV tables.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Repeatability, pulse infidelity and signaling.
    Diagnose {
        dataset: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Infer the compatibility graph and relabel it.
    Reconstruct {
        dataset: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS_THRESHOLD)]
        eps_threshold: f64,
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Reachable-state counts and entropy bound.
    Memory {
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Print the full JSON report after the counts line.
        #[arg(long)]
        json: bool,
        /// Initial distribution over the 13 rays as a JSON array.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long)]
        states_csv: Option<PathBuf>,
    },
    /// Fit the two-Poisson photon count model.
    DetectModel {
        /// Dataset whose photon counts are fitted.
        #[arg(required_unless_present = "histogram", conflicts_with = "histogram")]
        dataset: Option<PathBuf>,
        /// Text histogram: one `count frequency` pair per line.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Print the ray table as JSON.
    Rays,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Missing { path: PathBuf, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Analysis(String),
    #[error("{0}")]
    Fit(String),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Missing { .. } => 4,
            CliError::Parse(_) => 5,
            CliError::Analysis(_) => 6,
            CliError::Fit(_) => 7,
            CliError::Output { .. } => 8,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "bad-config",
            CliError::Missing { .. } => "missing-file",
            CliError::Parse(_) => "parse-error",
            CliError::Analysis(_) => "insufficient-data",
            CliError::Fit(_) => "fit-failed",
            CliError::Output { .. } => "write-failed",
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { path, source } => CliError::Missing {
                path,
                message: source.to_string(),
            },
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Fit(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Missing {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_csvs(dir: Option<&Path>, files: &[(&str, String)]) -> Result<(), CliError> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    for (name, text) in files {
        write_text(&dir.join(name), text)?;
    }
    Ok(())
}

fn load(path: &Path, threshold: Option<f64>) -> Result<LoadedDataset, CliError> {
    // threshold warnings are logged by the reader
    Ok(read_dataset_file(path, threshold)?)
}

/// Writes a line to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        panic!("cannot write to stdout: {e}");
    }
}

fn print_json(v: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn parse_histogram(text: &str) -> Result<CountHistogram, CliError> {
    let mut bins: Vec<u64> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let bad = || CliError::Parse(format!("histogram line {}: expected `count frequency`", n + 1));
        let [k, f] = fields[..] else { return Err(bad()) };
        let k: usize = k.parse().map_err(|_| bad())?;
        let f: u64 = f.parse().map_err(|_| bad())?;
        if k >= bins.len() {
            bins.resize(k + 1, 0);
        }
        bins[k] += f;
    }
    Ok(CountHistogram { bins })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            total,
            seed,
            noise,
            ideal,
            min_len,
            purge_run_length,
            out,
        } => {
            let noise = match (noise, ideal) {
                (Some(p), _) => NoiseConfig::from_json(&read_text(&p)?)?,
                (None, true) => NoiseConfig::ideal(),
                (None, false) => NoiseConfig::default(),
            };
            if min_len == 0 {
                return Err(CliError::Config("min_len must be at least 1".into()));
            }
            let c = run_campaign(
                total,
                &noise,
                seed,
                CampaignOptions {
                    min_len,
                    purge_run_length,
                },
            );
            write_dataset_file(&c, &out).map_err(|e| match e {
                DatasetError::Io { path, source } => CliError::Output {
                    path,
                    message: source.to_string(),
                },
                other => CliError::Parse(other.to_string()),
            })?;
            print_json(&json!({ "dataset": out, "provenance": Provenance::of(&c) }));
        }
        Command::Analyze {
            dataset,
            threshold,
            shards,
            eps_threshold,
            output,
            csv_dir,
        } => {
            let d = load(&dataset, threshold)?;
            let opts = AnalysisOptions {
                shards,
                eps_threshold,
                ..AnalysisOptions::default()
            };
            let r = analyze(&d.campaign, opts);
            let text = r.to_json();
            match output {
                Some(p) => write_text(&p, &text)?,
                None => emit(&text),
            }
            let mut files = vec![
                ("correlators.csv", correlators_csv(&r.correlators)),
                ("signaling.csv", signaling_csv(&r.diagnostics.entries)),
                (
                    "signaling_histograms.csv",
                    histograms_csv(r.diagnostics.backward.as_ref(), r.diagnostics.forward.as_ref()),
                ),
            ];
            if let Some(est) = &r.reconstruction.estimate {
                files.push(("eps.csv", eps_csv(est)));
            }
            write_csvs(csv_dir.as_deref(), &files)?;
        }
        Command::Diagnose {
            dataset,
            threshold,
            csv_dir,
        } => {
            let d = load(&dataset, threshold)?;
            let t = tally_for(&d.campaign, 1);
            let mut gaps = Vec::new();
            let diag = diagnostics(&t, &mut gaps);
            if diag.backward.is_none() && diag.forward.is_none() && diag.repeatability.is_empty() {
                return Err(CliError::Analysis(gaps.join("; ")));
            }
            print_json(&json!({
                "schema": REPORT_SCHEMA,
                "provenance": Provenance::of(&d.campaign),
                "diagnostics": diag,
                "gaps": gaps,
            }));
            let mut entries = signaling_ensemble(&t.conditioned, Direction::Backward);
            entries.extend(signaling_ensemble(&t.conditioned, Direction::Forward));
            write_csvs(
                csv_dir.as_deref(),
                &[
                    ("signaling.csv", signaling_csv(&entries)),
                    ("signaling_histograms.csv", histograms_csv(diag.backward.as_ref(), diag.forward.as_ref())),
                ],
            )?;
        }
        Command::Reconstruct {
            dataset,
            threshold,
            eps_threshold,
            csv_dir,
        } => {
            let d = load(&dataset, threshold)?;
            let t = tally_for(&d.campaign, 1);
            let mut gaps = Vec::new();
            let r = reconstruction(&t, eps_threshold, &mut gaps);
            let Some(est) = &r.estimate else {
                return Err(CliError::Analysis(gaps.join("; ")));
            };
            write_csvs(csv_dir.as_deref(), &[("eps.csv", eps_csv(est))])?;
            print_json(&json!({
                "schema": REPORT_SCHEMA,
                "provenance": Provenance::of(&d.campaign),
                "reconstruction": r,
            }));
        }
        Command::Memory {
            depth,
            json: as_json,
            initial,
            states_csv,
        } => {
            let report = match initial {
                None => MemoryReport::new(depth),
                Some(p) => {
                    let init: Vec<f64> = serde_json::from_str(&read_text(&p)?)
                        .map_err(|e| CliError::Config(format!("initial distribution: {e}")))?;
                    let atlas = occupancy(depth, &init).map_err(|e| CliError::Config(e.to_string()))?;
                    let mut r = MemoryReport::new(0);
                    r.depth = depth;
                    r.counts = atlas.counts();
                    r.entropies = atlas.entropies();
                    r.atlas = Some(atlas);
                    r
                }
            };
            emit(&report.counts_line());
            if as_json {
                print_json(&json!({ "schema": REPORT_SCHEMA, "memory": report }));
            } else {
                for (k, h) in report.entropies.iter().enumerate() {
                    emit(&format!("depth {k}: {} states, {h:.10} bits", report.counts[k]));
                }
            }
            if let (Some(p), Some(atlas)) = (states_csv, &report.atlas) {
                write_text(&p, &memory_states_csv(atlas))?;
            }
        }
        Command::DetectModel { dataset, histogram } => {
            let (hist, source) = match (dataset, histogram) {
                (_, Some(p)) => (parse_histogram(&read_text(&p)?)?, p),
                (Some(p), None) => (CountHistogram::from_campaign(&load(&p, None)?.campaign), p),
                (None, None) => unreachable!("clap requires one input"),
            };
            let fit = fit_poisson_mixture(&hist)?;
            print_json(&json!({
                "schema": REPORT_SCHEMA,
                "source": source,
                "shots": hist.total(),
                "fit": fit,
            }));
        }
        Command::Rays => emit(&ray_table_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.exit_code())
        }
    }
}
