//! `rrr simulate`: seeded replicate sweeps of a scenario, aggregated per
//! method into machine CSVs and a human-readable table.

use std::path::PathBuf;

use clap::Args;
use rrr_core::io::write_table_csv;
use rrr_core::{run_replicates, ErrorNorm, MethodProtocol, ReplicateTable, SimScenario};

use super::{ensure_out_dir, parse_methods};
use crate::errors::{io_err, CliError, Result};
use crate::fmt::{mean_sd, render_table};
use crate::manifest::RunManifest;
use crate::scenario::{find_preset, parse_scenario_file};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (flat key = value); exclusive with --preset
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Named preset (see `rrr list-presets`)
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Comma-separated subset of: huber_scad, huber_mcp, huber_nucl,
    /// lsq_scad, lsq_mcp, lsq_nucl
    #[arg(
        long,
        default_value = "huber_scad,huber_mcp,huber_nucl,lsq_scad,lsq_mcp,lsq_nucl"
    )]
    pub methods: String,
    /// Base seed; replicate r uses seed + r (required: no silent nondeterminism)
    #[arg(long)]
    pub seed: u64,
    /// Override the scenario's test-set size
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_K_FOLDS)]
    pub k_folds: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_LAMBDA_MIN)]
    pub lambda_min: f64,
    /// CV selection window (fraction of the explained range of the CV curve)
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_CV_WINDOW)]
    pub cv_window: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_RANK_TOL_REL)]
    pub rank_tol: f64,
    /// Estimation-error norm: frobenius | spectral
    #[arg(long, default_value = "frobenius")]
    pub error_norm: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn resolve_scenario(args: &SimulateArgs) -> Result<(SimScenario, Option<PathBuf>)> {
    let mut scenario = match (&args.scenario, &args.preset) {
        (Some(path), None) => parse_scenario_file(path)?,
        (None, Some(name)) => find_preset(name).ok_or_else(|| {
            CliError::InvalidArgs(format!(
                "unknown preset '{name}'; run `rrr list-presets` for the catalog"
            ))
        })?,
        _ => {
            return Err(CliError::InvalidArgs(
                "exactly one of --scenario or --preset is required".into(),
            ))
        }
    };
    scenario.seed = args.seed;
    if let Some(n_test) = args.n_test {
        scenario.n_test = n_test;
    }
    scenario.validate()?;
    Ok((scenario, args.scenario.clone()))
}

pub fn protocol_from(args: &SimulateArgs) -> Result<MethodProtocol> {
    let error_norm = match args.error_norm.to_ascii_lowercase().as_str() {
        "frobenius" | "fro" => ErrorNorm::SquaredFrobenius,
        "spectral" => ErrorNorm::SquaredSpectral,
        other => {
            return Err(CliError::InvalidArgs(format!(
                "--error-norm: unknown norm '{other}' (expected frobenius or spectral)"
            )))
        }
    };
    Ok(MethodProtocol {
        k_folds: args.k_folds,
        n_lambda: args.n_lambda,
        lambda_min: args.lambda_min,
        cv_window: args.cv_window,
        tol: args.tol,
        max_iter: args.max_iter,
        rank_tol_rel: args.rank_tol,
        error_norm,
    })
}

fn write_outputs(
    out_dir: &PathBuf,
    table: &ReplicateTable,
    manifest: &RunManifest,
    scenario_line: &str,
) -> Result<()> {
    // Machine table: one row per (method, metric).
    let mut rows = Vec::new();
    for s in &table.summaries {
        for (metric, m) in [
            ("est_error", &s.est_error),
            ("mspe_test", &s.mspe),
            ("rank", &s.rank),
        ] {
            rows.push(vec![
                s.method.name().to_string(),
                metric.to_string(),
                format!("{}", m.mean),
                format!("{}", m.sd),
            ]);
        }
    }
    write_table_csv(
        &out_dir.join("results.csv"),
        &["method", "metric", "mean", "sd"],
        &rows,
    )?;

    let mut rep_rows = Vec::new();
    for r in &table.records {
        match &r.report {
            Ok(rep) => rep_rows.push(vec![
                format!("{}", r.replicate),
                format!("{}", r.seed),
                r.method.name().to_string(),
                format!("{}", rep.est_error),
                format!("{}", rep.mspe_test),
                format!("{}", rep.rank_hat),
                r.selected_tau.map_or("NA".into(), |v| format!("{v}")),
                r.selected_lambda.map_or("NA".into(), |v| format!("{v}")),
                "ok".to_string(),
            ]),
            Err(msg) => rep_rows.push(vec![
                format!("{}", r.replicate),
                format!("{}", r.seed),
                r.method.name().to_string(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                format!("failed: {msg}"),
            ]),
        }
    }
    write_table_csv(
        &out_dir.join("replicates.csv"),
        &[
            "replicate",
            "seed",
            "method",
            "est_error",
            "mspe_test",
            "rank",
            "selected_tau",
            "selected_lambda",
            "status",
        ],
        &rep_rows,
    )?;

    // Human table in the benchmark layout: mean (sd) per metric.
    let human_rows: Vec<Vec<String>> = table
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.name().to_string(),
                mean_sd(s.est_error.mean, s.est_error.sd),
                mean_sd(s.mspe.mean, s.mspe.sd),
                mean_sd(s.rank.mean, s.rank.sd),
            ]
        })
        .collect();
    let mut text = format!("scenario: {scenario_line}\n");
    text.push_str(&render_table(
        &["method", "est_error", "mspe_test", "rank"],
        &human_rows,
    ));
    let table_path = out_dir.join("table.txt");
    std::fs::write(&table_path, text).map_err(|e| io_err(&table_path, e))?;

    manifest.write(out_dir)
}

fn scenario_descriptor(scenario: &SimScenario) -> String {
    format!(
        "n={} p={} q={} r={} design={:?} noise={:?} missing={} n_test={} seed={}",
        scenario.n,
        scenario.p,
        scenario.q,
        scenario.r,
        scenario.design,
        scenario.noise,
        scenario.missing_fraction,
        scenario.n_test,
        scenario.seed
    )
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let (scenario, scenario_path) = resolve_scenario(args)?;
    let methods = parse_methods(&args.methods)?;
    let protocol = protocol_from(args)?;

    let table = run_replicates(&scenario, &methods, &protocol, args.reps)?;

    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new("simulate", args.seed);
    if let Some(path) = &scenario_path {
        manifest.add_input(path)?;
    }
    if let Some(name) = &args.preset {
        manifest.param("preset", name.clone());
    }
    manifest.param("scenario", scenario_descriptor(&scenario));
    manifest.param("reps", args.reps);
    manifest.param("methods", args.methods.clone());
    manifest.param("k_folds", args.k_folds);
    manifest.param("n_lambda", args.n_lambda);
    manifest.param("lambda_min", args.lambda_min);
    manifest.param("cv_window", args.cv_window);
    manifest.param("tol", args.tol);
    manifest.param("max_iter", args.max_iter);
    manifest.param("rank_tol", args.rank_tol);
    manifest.param("error_norm", args.error_norm.clone());
    if let Some(n_test) = args.n_test {
        manifest.param("n_test", n_test);
    }

    write_outputs(&args.out_dir, &table, &manifest, &scenario_descriptor(&scenario))?;

    let failed: usize = table.summaries.iter().map(|s| s.replicates_failed).sum();
    println!(
        "simulate: {} replicates x {} methods done ({} failures)",
        args.reps,
        table.summaries.len(),
        failed
    );
    Ok(())
}
