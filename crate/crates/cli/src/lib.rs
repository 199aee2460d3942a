//! Config-driven experiment runner for the `driftlab` numerics.
//!
//! Each subcommand reads one JSON config, runs the experiment in it and
//! writes CSV tables, `summary.json` and `report.md` into the output
//! directory. Exit codes: 0 all checks pass, 1 a check failed, 2 bad
//! config or arguments, 3 numerical failure.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::artifacts::{write_outcome, Outcome};
use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "driftlab",
    version,
    about = "Numerical checks for parabolic equations with singular drift"
)]
pub struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the seed of randomized experiments.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel constants against their closed forms.
    Constants,
    /// Morrey norms, randomized invariants and the bump drift.
    Morrey,
    /// Threshold decomposition of a drift and its certificates.
    Decompose,
    /// Backward solve, a-priori estimate and Picard iteration.
    Solve,
    /// Scaling exponent of the estimate.
    Scaling,
    /// Monte Carlo checks of the diffusion.
    Mc,
    /// Radial counterexample: residual order and blow-up trend.
    Counterexample,
    /// Anisotropic integrability example.
    Anisotropic,
    /// Aggregate run directories into one table.
    Report {
        /// Directory to scan (default: `--out`).
        dir: Option<PathBuf>,
    },
}

impl Command {
    fn kind(&self) -> Option<Kind> {
        Some(match self {
            Command::Constants => Kind::Constants,
            Command::Morrey => Kind::Morrey,
            Command::Decompose => Kind::Decompose,
            Command::Solve => Kind::Solve,
            Command::Scaling => Kind::Scaling,
            Command::Mc => Kind::Mc,
            Command::Counterexample => Kind::Counterexample,
            Command::Anisotropic => Kind::Anisotropic,
            Command::Report { .. } => return None,
        })
    }
}

/// Runs `config` and writes its artifacts into `out`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out: &Path,
    seed: Option<u64>,
) -> CliResult<Outcome> {
    let outcome = experiments::run(config, seed)?;
    write_outcome(&outcome, out)?;
    Ok(outcome)
}

fn print_outcome(outcome: &Outcome, out: &Path) {
    for c in &outcome.checks {
        println!(
            "{}  {}: {:?} {} {:?}",
            c.status.as_str(),
            c.name,
            c.measured,
            c.relation.symbol(),
            c.bound
        );
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let status = if outcome.passed() { "PASS" } else { "FAIL" };
    println!(
        "{} {status}; artifacts in {}",
        outcome.experiment,
        out.display()
    );
}

fn execute(cli: Cli) -> CliResult<i32> {
    if let Command::Report { dir } = &cli.command {
        let root = dir
            .clone()
            .or_else(|| cli.out.clone())
            .ok_or_else(|| CliError::config("report needs a directory (positional or --out)"))?;
        let agg = report::aggregate(&root)?;
        let target = cli.out.clone().unwrap_or_else(|| root.clone());
        report::write_aggregate(&agg, &target)?;
        print!("{}", agg.to_markdown());
        return Ok(if agg.passed() { 0 } else { 1 });
    }
    let kind = cli.command.kind().expect("experiment subcommand");
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config(format!("{} needs --config PATH", kind.name())))?;
    let config = ExperimentConfig::load(path)?;
    if config.experiment != kind {
        return Err(CliError::config(format!(
            "{} holds a {} config, not {}",
            path.display(),
            config.experiment.name(),
            kind.name()
        )));
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::config("no output directory: pass --out or set output_dir"))?;
    let outcome = run_experiment(&config, &out, cli.seed)?;
    print_outcome(&outcome, &out);
    Ok(if outcome.passed() { 0 } else { 1 })
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::config("--threads must be positive")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli)),
            Err(e) => Err(CliError::config(format!("thread pool: {e}"))),
        },
        None => execute(cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
