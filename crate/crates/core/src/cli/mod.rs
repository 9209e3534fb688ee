//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or usage
//! error, 3 runtime failure.

pub mod records;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::{
    aggregate, default_threads, preset, run_sweep, run_verify_with, PresetName, PresetPlan, SweepConfig, VerifyConfig,
};
use crate::train::{fit_from_mean, EstimatorConfig, FitResult};

use records::{aggregates_csv, records_csv, verify_csv, write_atomic, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "xferlab",
    version,
    about = "Monte-Carlo experiments for linear multi-task representation transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a parameter sweep and write records, aggregates and a manifest.
    Sweep {
        /// JSON sweep configuration.
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in experiment instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: XFERLAB_THREADS, else logical cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the closed-form per-task solutions against the numerical oracle.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a records file: slopes, reference overlays, paired counts.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A closed-form fitter, injectable so the verify command can be mutation-tested.
pub type Fitter = dyn Fn(&DVector<f64>, &EstimatorConfig) -> Result<FitResult>;

/// Runs the CLI with the given arguments (including the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &fit_from_mean)
}

pub fn run_with<I, T>(args: I, fitter: &Fitter) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Sweep {
            config,
            preset,
            trials,
            seed,
            threads,
            out,
        } => cmd_sweep(config.as_deref(), preset.as_deref(), trials, seed, threads, &out),
        Command::Verify { out } => cmd_verify(&out, fitter),
        Command::Report { records, out } => cmd_report(&records, &out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("xferlab: {e}");
            match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn runtime_io(what: &str, path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{what} {}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|e| runtime_io("cannot write", &path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| runtime_io("cannot create", dir, e))
}

/// Reads and parses a sweep config; parse errors carry line and column.
pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// SHA-256 (hex) of the canonical JSON of the resolved configs.
pub fn config_digest(configs: &[SweepConfig]) -> String {
    let resolved: Vec<serde_json::Value> = configs.iter().map(SweepConfig::resolved_json).collect();
    let bytes = serde_json::to_vec(&resolved).expect("json values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn cmd_sweep(
    config: Option<&Path>,
    preset_name: Option<&str>,
    trials: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: &Path,
) -> Result<i32> {
    let mut configs = match (config, preset_name) {
        (Some(path), None) => vec![load_config(path)?],
        (None, Some(name)) => preset(name.parse::<PresetName>()?).sweeps()?,
        _ => return Err(Error::Config("give exactly one of --config and --preset".into())),
    };
    for c in &mut configs {
        if let Some(t) = trials {
            c.trials = t;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
        c.validate()?;
    }
    let threads = threads.unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(Error::Config("--threads must be positive".into()));
    }

    ensure_dir(out)?;
    let started_at = now();
    let mut records = Vec::new();
    for c in &configs {
        records.extend(run_sweep(c, threads)?);
    }
    let aggregates = aggregate(&records);
    let finished_at = now();

    let failed = records.iter().filter(|r| !r.is_ok()).count();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_digest: config_digest(&configs),
        root_seed: configs[0].seed,
        started_at,
        finished_at,
        record_count: records.len(),
        experiments: configs.iter().map(|c| c.experiment.clone()).collect(),
    };
    let manifest_json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(out, "records.csv", &records_csv(&records)?)?;
    write_file(out, "aggregates.csv", &aggregates_csv(&aggregates)?)?;
    write_file(out, "manifest.json", &manifest_json)?;
    println!(
        "{} records ({failed} failed) from {} experiment(s) written to {}",
        records.len(),
        configs.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_verify(out: &Path, fitter: &Fitter) -> Result<i32> {
    let cfg = match preset(PresetName::VerifyClosedForms) {
        PresetPlan::Verify(v) => v,
        PresetPlan::Sweeps(_) => VerifyConfig::default(),
    };
    ensure_dir(out)?;
    let report = run_verify_with(&cfg, fitter)?;
    write_file(out, "verify.csv", &verify_csv(&report)?)?;
    let passed = report.passed();
    println!(
        "{} instances, max objective gap {:.3e}, max direction error {:.3e}: {}",
        report.rows.len(),
        report.max_gap(),
        report.max_direction_error(),
        if passed { "pass" } else { "FAIL" }
    );
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn table_bytes(table: (Vec<&'static str>, Vec<Vec<String>>)) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Contract(format!("csv encoding failed: {e}"));
    w.write_record(&table.0).map_err(enc)?;
    for row in &table.1 {
        w.write_record(row).map_err(enc)?;
    }
    w.into_inner()
        .map_err(|e| Error::Contract(format!("csv encoding failed: {e}")))
}

fn cmd_report(records_path: &Path, out: &Path) -> Result<i32> {
    let recs = records::read_records(records_path)?;
    let rep = report::build_report(&recs)?;
    ensure_dir(out)?;
    write_file(out, "slopes.csv", &table_bytes(report::slope_rows(&rep))?)?;
    write_file(out, "overlay.csv", &table_bytes(report::overlay_rows(&rep))?)?;
    write_file(out, "paired.csv", &table_bytes(report::paired_rows(&rep))?)?;
    for s in rep
        .slopes
        .iter()
        .filter(|s| s.metric == "sin_theta" && !s.slope.is_nan())
    {
        println!(
            "{} {}: sin_theta slope {:+.3} vs {} (r² {:.3}); reference {} slope {:+.3}",
            s.experiment,
            s.estimator,
            s.slope,
            s.axis.tag(),
            s.r_squared,
            s.reference_kind.tag(),
            s.reference_slope
        );
    }
    for p in &rep.paired {
        println!(
            "{} @ {}: {} vs {}: {} wins, {} losses, {} ties (p = {:.2e})",
            p.experiment,
            p.axis_value,
            p.estimator,
            report::BASELINE,
            p.wins,
            p.losses,
            p.ties,
            p.sign_test_p
        );
    }
    Ok(EXIT_OK)
}
