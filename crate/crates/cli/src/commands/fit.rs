//! `rrr fit`: one penalized fit on user CSVs.

use std::path::PathBuf;

use clap::Args;
use rrr_core::{fit, lambda_max, CoreError, FitConfig, StepSize};

use super::{ensure_out_dir, parse_penalty, parse_tau, read_design, read_response};
use crate::errors::{CliError, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Design matrix CSV (header row, one observation per row, no missing)
    #[arg(long)]
    pub x: PathBuf,
    /// Response matrix CSV (missing entries empty or NA)
    #[arg(long)]
    pub y: PathBuf,
    /// Penalty family: mcp | scad | nuclear
    #[arg(long)]
    pub penalty: String,
    /// Penalty strength
    #[arg(long)]
    pub lambda: f64,
    /// Huber threshold (a positive number, or "inf" for squared loss)
    #[arg(long, default_value = "1")]
    pub tau: String,
    /// Penalty concavity (defaults: 3.0 for MCP, 3.7 for SCAD)
    #[arg(long)]
    pub eta: Option<f64>,
    /// Step size: "auto" for 1/L, or a positive number
    #[arg(long, default_value = "auto")]
    pub step: String,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Relative singular-value cut for the reported rank
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_RANK_TOL_REL)]
    pub rank_tol: f64,
    /// Recorded in the manifest (the fit itself is deterministic)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &FitArgs) -> Result<()> {
    let x = read_design(&args.x)?;
    let (y, mask) = read_response(&args.y)?;
    let tau = parse_tau(&args.tau)?;
    let penalty = parse_penalty(&args.penalty, args.lambda, args.eta)?;
    let step_size = if args.step.eq_ignore_ascii_case("auto") {
        StepSize::Auto
    } else {
        let v: f64 = args.step.parse().map_err(|_| {
            CliError::InvalidArgs(format!("--step: '{}' is not a number or 'auto'", args.step))
        })?;
        StepSize::Fixed(v)
    };

    let mut config = FitConfig::new(tau, penalty);
    config.step_size = step_size;
    config.tol = args.tol;
    config.max_iter = args.max_iter;
    config.rank_tol_rel = args.rank_tol;

    let mut warnings = Vec::new();
    match lambda_max(&x, &y, &mask) {
        Ok(lmax) if args.lambda >= lmax => {
            warnings.push(format!(
                "lambda = {} is at or above the data's lambda_max = {lmax}; the fit will be zero (rank 0)",
                args.lambda
            ));
        }
        Ok(_) => {}
        // Degenerate data still fits (to zero); the warning is best-effort.
        Err(CoreError::DegenerateCrossCovariance) => {}
        Err(e) => return Err(e.into()),
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let result = fit(&y, &x, &mask, &config)?;

    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new("fit", args.seed);
    manifest.add_input(&args.x)?;
    manifest.add_input(&args.y)?;
    manifest.param("penalty", penalty.family.name());
    manifest.param("lambda", args.lambda);
    manifest.param("eta", penalty.eta);
    manifest.param("tau", args.tau.clone());
    manifest.param("step", args.step.clone());
    manifest.param("tol", args.tol);
    manifest.param("max_iter", args.max_iter);
    manifest.param("rank_tol", args.rank_tol);

    super::write_fit_artifacts(&args.out_dir, &result, &manifest, &warnings)?;
    manifest.write(&args.out_dir)?;
    println!(
        "fit: converged={} iterations={} rank={}",
        result.converged, result.iterations, result.rank
    );
    Ok(())
}
