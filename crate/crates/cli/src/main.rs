//! `rrr`: robust reduced-rank regression from the command line.
//!
//! Subcommands: `fit` (one penalized fit), `cv` (cross-validated tuning),
//! `simulate` (seeded scenario sweeps), `pipeline` (standardize, screen,
//! repeated splits), `list-presets`.

mod commands;
mod errors;
mod fmt;
mod manifest;
mod scenario;

use clap::{Parser, Subcommand};
use errors::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "rrr",
    version,
    about = "Robust reduced-rank regression: masked Huber loss with MCP/SCAD/nuclear spectral penalties"
)]
struct Cli {
    /// Worker threads (default: the RRR_THREADS env var, else all cores).
    /// Results are identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one penalized model on CSV data
    Fit(commands::fit::FitArgs),
    /// Jointly tune (tau, lambda) by K-fold cross-validation, then refit
    Cv(commands::cv::CvArgs),
    /// Run seeded simulation replicates and aggregate benchmark tables
    Simulate(commands::simulate::SimulateArgs),
    /// Standardize, screen predictors, and evaluate over repeated splits
    Pipeline(commands::pipeline::PipelineArgs),
    /// List the built-in scenario presets
    ListPresets,
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = flag {
        if t == 0 {
            return Err(CliError::InvalidArgs("--threads must be >= 1".into()));
        }
        return Ok(Some(t));
    }
    match std::env::var("RRR_THREADS") {
        Ok(v) => {
            let t: usize = v.parse().map_err(|_| {
                CliError::InvalidArgs(format!("RRR_THREADS: '{v}' is not a positive integer"))
            })?;
            if t == 0 {
                return Err(CliError::InvalidArgs("RRR_THREADS must be >= 1".into()));
            }
            Ok(Some(t))
        }
        Err(_) => Ok(None),
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Fit(args) => commands::fit::run(args),
        Command::Cv(args) => commands::cv::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
        Command::ListPresets => {
            for (name, desc, _) in scenario::presets() {
                println!("{name:<28} {desc}");
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match resolve_threads(cli.threads)? {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::InvalidArgs(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            std::process::ExitCode::FAILURE
        }
    }
}
