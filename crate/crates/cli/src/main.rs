//! `tfd`: config-driven quench runs, parameter sweeps and the verification
//! suite.
//!
//! Exit statuses: 0 success, 1 i/o error, 2 config error, 3 integration
//! failure, 4 truncation refusal, 5 verification failure.

mod config;
mod error;
mod output;
mod quench;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use tfd_core::oracle::TruncationReport;
use tfd_core::verify::{run_suite, Status};

use crate::config::{RunConfig, RunKind};
use crate::error::CliError;
use crate::output::{format_number, Comparison, RunManifest, Table};
use crate::quench::{run_quench, QuenchResult};

/// Overrides the number of worker threads used by sweeps.
const WORKERS_ENV: &str = "TFD_WORKERS";

#[derive(Parser)]
#[command(name = "tfd", version, about = "Thermofield dynamics of driven quadratic Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one protocol and write modes.csv, observables.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a run over the values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { config, out } => cmd_sweep(&config, out),
        Command::Verify { config, out } => cmd_verify(config.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tfd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output_dir(cli: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cli
        .or_else(|| config.run.output.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set [run] output".into()))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_quench(dir: &Path, result: &QuenchResult) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir)?;
    result.modes.write_csv(&dir.join("modes.csv"))?;
    result.observables.write_csv(&dir.join("observables.csv"))?;
    Ok(vec!["modes.csv".into(), "observables.csv".into()])
}

fn cmd_run(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let config = config::load(path)?;
    config.validate_for(RunKind::Quench)?;
    let dir = output_dir(out, &config)?;
    let result = run_quench(&config)?;
    let outputs = write_quench(&dir, &result)?;

    let mut manifest = RunManifest::new("quench", config.digest(), started, clock.elapsed());
    manifest.drift = result.drift;
    manifest.truncation = result.truncation;
    manifest.comparisons = result.comparisons;
    manifest.outputs = outputs;
    manifest.write(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_sweep(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let config = config::load(path)?;
    config.validate_for(RunKind::Sweep)?;
    let sweep = config.sweep.clone().expect("validated");
    let dir = output_dir(out, &config)?;
    let entries = sweep
        .values
        .iter()
        .map(|v| config.with_parameter(&sweep.parameter, *v))
        .collect::<Result<Vec<_>, _>>()?;

    let pool = worker_pool()?;
    let results: Vec<Result<QuenchResult, CliError>> =
        pool.install(|| entries.par_iter().map(run_quench).collect());

    let mut summary: Option<Table> = None;
    let mut manifest = RunManifest::new("sweep", config.digest(), started, clock.elapsed());
    let mut truncation: Option<TruncationReport> = None;
    for (k, (value, result)) in sweep.values.iter().zip(results).enumerate() {
        let result = result?;
        let name = format!("entry_{k:03}");
        for f in write_quench(&dir.join(&name), &result)? {
            manifest.outputs.push(format!("{name}/{f}"));
        }
        for (key, v) in &result.drift.entries {
            manifest.drift.track(key, *v);
        }
        if let Some(t) = result.truncation {
            let acc = truncation.get_or_insert_with(TruncationReport::default);
            acc.tail_weight = acc.tail_weight.max(t.tail_weight);
            acc.commutator_defect = acc.commutator_defect.max(t.commutator_defect);
        }
        for c in result.comparisons {
            match manifest.comparisons.iter_mut().find(|m| m.column == c.column) {
                Some(m) => m.max_abs_difference = m.max_abs_difference.max(c.max_abs_difference),
                None => manifest.comparisons.push(Comparison { ..c }),
            }
        }
        let last = result.observables.rows.last().expect("trajectory is never empty");
        let table = summary.get_or_insert_with(|| {
            let mut headers = vec![format!("{} [config]", sweep.parameter)];
            headers.extend(result.observables.headers.iter().map(|h| format!("final_{h}")));
            Table {
                headers,
                rows: Vec::new(),
            }
        });
        let mut row = vec![*value];
        row.extend(last);
        table.push(row);
    }
    let summary = summary.expect("sweep has at least one value");
    summary.write_csv(&dir.join("sweep.csv"))?;
    manifest.outputs.push("sweep.csv".into());
    manifest.truncation = truncation;
    manifest.duration_seconds = clock.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    println!("wrote {} entries to {}", sweep.values.len(), dir.display());
    Ok(())
}

fn cmd_verify(path: Option<&Path>, out: Option<PathBuf>) -> Result<(), CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let config = match path {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    config.validate_for(RunKind::Verify)?;
    let report = run_suite(&config.verify_settings());

    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let cmp = if c.strict { "<" } else { "<=" };
        print!(
            "criterion {:>2}  {status}  {:<34} measured {:>24}  {cmp} {:e}",
            c.criterion,
            c.id,
            format_number(c.measured),
            c.tolerance
        );
        if c.status == Status::Fail {
            print!("  excess {:e}", c.excess());
        }
        if !c.detail.is_empty() {
            print!("  ({})", c.detail);
        }
        println!();
    }
    let failed = report.checks.iter().filter(|c| c.status == Status::Fail).count();
    let skipped = report.checks.iter().filter(|c| c.status == Status::Skipped).count();
    println!(
        "{} checks: {} passed, {failed} failed, {skipped} skipped",
        report.checks.len(),
        report.checks.len() - failed - skipped
    );

    if let Some(dir) = out.or_else(|| config.run.output.clone()) {
        std::fs::create_dir_all(&dir)?;
        let mut manifest = RunManifest::new("verify", config.digest(), started, clock.elapsed());
        manifest.drift = report.drift.clone();
        manifest.truncation = report.truncation;
        manifest.checks = report.checks.clone();
        manifest.write(&dir)?;
    }
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
