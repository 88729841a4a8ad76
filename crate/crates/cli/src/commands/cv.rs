//! `rrr cv`: K-fold cross-validated tuning over (tau, lambda), then a final
//! refit at the selected pair.

use std::path::PathBuf;

use clap::Args;
use rrr_core::io::write_table_csv;
use rrr_core::{cross_validate, lambda_max, log_grid, FitConfig, HuberParam, TuningGrid};
use serde_json::json;

use super::{ensure_out_dir, parse_penalty, parse_taus, read_design, read_response};
use crate::errors::Result;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Penalty family: mcp | scad | nuclear
    #[arg(long)]
    pub penalty: String,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated tau candidates; "inf" allowed
    #[arg(long, default_value = "0.1,1,10")]
    pub taus: String,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_K_FOLDS)]
    pub k_folds: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_LAMBDA_MIN)]
    pub lambda_min: f64,
    /// Selection window as a fraction of the CV curve's explained range;
    /// 0 selects the exact minimizer (ties toward larger lambda, then tau)
    #[arg(long, default_value_t = 0.0)]
    pub cv_window: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_RANK_TOL_REL)]
    pub rank_tol: f64,
    /// Fold-shuffle seed (required: no silent nondeterminism)
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &CvArgs) -> Result<()> {
    if args.k_folds < 2 {
        return Err(crate::errors::CliError::InvalidArgs(format!(
            "--k-folds must be at least 2, got {}",
            args.k_folds
        )));
    }
    let x = read_design(&args.x)?;
    let (y, mask) = read_response(&args.y)?;
    let taus = parse_taus(&args.taus)?;
    let penalty = parse_penalty(&args.penalty, 1.0, args.eta)?;

    let lmax = lambda_max(&x, &y, &mask)?;
    let lambdas = log_grid(lmax, args.lambda_min, args.n_lambda)?;
    let grid = TuningGrid::new(taus, lambdas)?;

    let mut base = FitConfig::new(HuberParam::infinite(), penalty);
    base.tol = args.tol;
    base.max_iter = args.max_iter;
    base.rank_tol_rel = args.rank_tol;

    let report = cross_validate(
        &y,
        &x,
        &mask,
        &grid,
        args.k_folds,
        args.seed,
        &base,
        args.cv_window,
    )?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new("cv", args.seed);
    manifest.add_input(&args.x)?;
    manifest.add_input(&args.y)?;
    manifest.param("penalty", penalty.family.name());
    manifest.param("eta", penalty.eta);
    manifest.param("taus", args.taus.clone());
    manifest.param("k_folds", args.k_folds);
    manifest.param("n_lambda", args.n_lambda);
    manifest.param("lambda_min", args.lambda_min);
    manifest.param("cv_window", args.cv_window);
    manifest.param("tol", args.tol);
    manifest.param("max_iter", args.max_iter);
    manifest.param("rank_tol", args.rank_tol);

    // (tau, lambda) surface with per-fold detail; skipped folds print NA.
    let mut header: Vec<String> = vec!["tau".into(), "lambda".into(), "mean_mse".into()];
    for f in 0..args.k_folds {
        header.push(format!("fold_{f}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut rows = Vec::new();
    for (ti, &tau) in report.taus.iter().enumerate() {
        for (li, &lambda) in report.lambdas.iter().enumerate() {
            let mut row = vec![
                format!("{tau}"),
                format!("{lambda}"),
                format!("{}", report.mean_mse[(ti, li)]),
            ];
            for f in 0..args.k_folds {
                row.push(match report.fold_mse[ti][li][f] {
                    Some(v) => format!("{v}"),
                    None => "NA".into(),
                });
            }
            rows.push(row);
        }
    }
    write_table_csv(&args.out_dir.join("cv_surface.csv"), &header_refs, &rows)?;

    let selected = json!({
        "selected_tau": report.selected_tau,
        "selected_lambda": report.selected_lambda,
        "selected_tau_idx": report.selected_tau_idx,
        "selected_lambda_idx": report.selected_lambda_idx,
        "lambda_max": lmax,
        "cv_window": args.cv_window,
        "fold_assignment": report.fold_assignment,
        "warnings": report.warnings,
        "manifest": manifest.to_value(),
    });
    super::write_json(&args.out_dir.join("selected.json"), &selected)?;
    super::write_fit_artifacts(&args.out_dir, &report.final_fit, &manifest, &report.warnings)?;
    manifest.write(&args.out_dir)?;

    println!(
        "cv: selected tau={} lambda={} rank={}",
        report.selected_tau, report.selected_lambda, report.final_fit.rank
    );
    Ok(())
}
