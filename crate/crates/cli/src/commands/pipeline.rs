//! `rrr pipeline`: the real-data workflow — standardize, screen predictors by
//! cross-covariance score, then evaluate methods over repeated random
//! train/test splits.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use rrr_core::io::write_table_csv;
use rrr_core::rng::{stream, StreamPurpose};
use rrr_core::sim::synthetic_dataset;
use rrr_core::{
    cross_validate, lambda_max, log_grid, predict, repeated_splits, screen_predictors,
    select_rows, standardize, DenseMatrix, FitConfig, HuberParam, Method, MethodProtocol,
    ObservationMask, TuningGrid,
};
use rand::seq::index::sample as index_sample;

use super::{ensure_out_dir, parse_methods};
use crate::errors::{io_err, CliError, Result};
use crate::fmt::{mean_sd, render_table};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Design matrix CSV; omit with --synthetic
    #[arg(long, required_unless_present = "synthetic")]
    pub x: Option<PathBuf>,
    /// Response matrix CSV (missing entries empty or NA); omit with --synthetic
    #[arg(long, required_unless_present = "synthetic")]
    pub y: Option<PathBuf>,
    /// Use the packaged synthetic stand-in dataset instead of CSV inputs
    #[arg(long, conflicts_with_all = ["x", "y"])]
    pub synthetic: bool,
    #[arg(long, default_value_t = 59)]
    pub synth_n: usize,
    #[arg(long, default_value_t = 300)]
    pub synth_p: usize,
    #[arg(long, default_value_t = 20)]
    pub synth_q: usize,
    #[arg(long, default_value_t = 3)]
    pub synth_rank: usize,
    #[arg(long, default_value_t = 1.0)]
    pub synth_noise_sd: f64,
    /// Predictors kept after screening
    #[arg(long, default_value_t = 100)]
    pub n_keep: usize,
    /// Test rows per repetition
    #[arg(long, default_value_t = 9)]
    pub n_test: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value = "huber_mcp,huber_scad,huber_nucl")]
    pub methods: String,
    /// Additionally delete this fraction of response entries uniformly
    #[arg(long, default_value_t = 0.0)]
    pub missing: f64,
    /// whole: standardize and screen once on all rows (matches the protocol
    /// this pipeline reproduces); split: recompute on training rows per
    /// repetition so the test rows never leak
    #[arg(long, default_value = "whole")]
    pub standardize: String,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_K_FOLDS)]
    pub k_folds: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_LAMBDA_MIN)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = rrr_core::tuning::DEFAULT_CV_WINDOW)]
    pub cv_window: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = rrr_core::solver::DEFAULT_RANK_TOL_REL)]
    pub rank_tol: f64,
    /// Base seed (required: no silent nondeterminism)
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

enum Mode {
    Whole,
    Split,
}

struct RepOutcome {
    rep: usize,
    method: Method,
    result: std::result::Result<(f64, usize, f64, f64), String>,
}

/// CV-tune and fit one method on the training rows, then score squared error
/// over the observed held-out entries.
#[allow(clippy::too_many_arguments)]
fn eval_on_split(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mask: &ObservationMask,
    train: &[usize],
    test: &[usize],
    method: Method,
    protocol: &MethodProtocol,
    cv_seed: u64,
) -> std::result::Result<(f64, usize, f64, f64), String> {
    let fit_once = || -> Result<(f64, usize, f64, f64)> {
        let x_train = select_rows(x, train);
        let y_train = select_rows(y, train);
        let m_train = mask.select_rows(train)?;
        let lmax = lambda_max(&x_train, &y_train, &m_train)?;
        let lambdas = log_grid(lmax, protocol.lambda_min, protocol.n_lambda)?;
        let grid = TuningGrid::new(method.tau_grid(), lambdas)?;
        let mut base = FitConfig::new(HuberParam::infinite(), method.penalty());
        base.tol = protocol.tol;
        base.max_iter = protocol.max_iter;
        base.rank_tol_rel = protocol.rank_tol_rel;
        let report = cross_validate(
            &y_train,
            &x_train,
            &m_train,
            &grid,
            protocol.k_folds,
            cv_seed,
            &base,
            protocol.cv_window,
        )?;
        let x_test = select_rows(x, test);
        let pred = predict(&x_test, &report.final_fit.b_hat)?;
        let mut sq = 0.0;
        let mut count = 0usize;
        for (local, &row) in test.iter().enumerate() {
            for j in 0..y.cols() {
                if mask.is_observed(row, j) {
                    let d = y[(row, j)] - pred[(local, j)];
                    sq += d * d;
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(rrr_core::CoreError::InvalidSplit(
                "no observed entries in the held-out rows".into(),
            )
            .into());
        }
        Ok((
            sq / count as f64,
            report.final_fit.rank,
            report.selected_tau,
            report.selected_lambda,
        ))
    };
    fit_once().map_err(|e| e.to_string())
}

pub fn run(args: &PipelineArgs) -> Result<()> {
    let mode = match args.standardize.to_ascii_lowercase().as_str() {
        "whole" => Mode::Whole,
        "split" => Mode::Split,
        other => {
            return Err(CliError::InvalidArgs(format!(
                "--standardize: unknown mode '{other}' (expected whole or split)"
            )))
        }
    };
    let methods = parse_methods(&args.methods)?;
    let protocol = MethodProtocol {
        k_folds: args.k_folds,
        n_lambda: args.n_lambda,
        lambda_min: args.lambda_min,
        cv_window: args.cv_window,
        tol: args.tol,
        max_iter: args.max_iter,
        rank_tol_rel: args.rank_tol,
        error_norm: rrr_core::ErrorNorm::SquaredFrobenius,
    };

    // Load or synthesize the raw data.
    let (x_raw, y_raw, mut mask) = if args.synthetic {
        let (x, y) = synthetic_dataset(
            args.synth_n,
            args.synth_p,
            args.synth_q,
            args.synth_rank,
            args.synth_noise_sd,
            args.seed,
        )?;
        let mask = ObservationMask::fully_observed(x.rows(), y.cols());
        (x, y, mask)
    } else {
        let x = super::read_design(args.x.as_ref().expect("clap enforces"))?;
        let (y, mask) = super::read_response(args.y.as_ref().expect("clap enforces"))?;
        (x, y, mask)
    };
    if x_raw.rows() != y_raw.rows() {
        return Err(rrr_core::CoreError::ShapeMismatch {
            op: "pipeline: X vs Y rows",
            left_rows: x_raw.rows(),
            left_cols: x_raw.cols(),
            right_rows: y_raw.rows(),
            right_cols: y_raw.cols(),
        }
        .into());
    }
    let n = x_raw.rows();
    let q = y_raw.cols();

    // Optional extra missingness, uniform over all response entries.
    if args.missing > 0.0 {
        if args.missing >= 1.0 {
            return Err(CliError::InvalidArgs(format!(
                "--missing must lie in [0, 1), got {}",
                args.missing
            )));
        }
        let total = n * q;
        let count = ((args.missing * total as f64).round() as usize).min(total - 1);
        let mut observed: Vec<bool> = (0..n)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .map(|(i, j)| mask.is_observed(i, j))
            .collect();
        let mut rng = stream(args.seed, StreamPurpose::Mask);
        for idx in index_sample(&mut rng, total, count) {
            observed[idx] = false;
        }
        mask = ObservationMask::new(n, q, observed)?;
    }

    if args.n_keep > x_raw.cols() {
        return Err(CliError::InvalidArgs(format!(
            "--n-keep = {} exceeds the number of predictors {}",
            args.n_keep,
            x_raw.cols()
        )));
    }

    // Whole-data standardization and screening: these reference artifacts are
    // written in both modes; split mode redoes them per repetition internally.
    let (x_std, x_params) = standardize(&x_raw, None)?;
    let (y_std, y_params) = standardize(&y_raw, Some(&mask))?;
    let screening = screen_predictors(&x_std, &y_std, &mask, args.n_keep)?;

    let splits = repeated_splits(n, args.n_test, args.reps, args.seed)?;

    let outcomes: Vec<RepOutcome> = splits
        .par_iter()
        .enumerate()
        .map(|(rep, (train, test))| {
            let cv_seed = args.seed.wrapping_add(rep as u64);
            let mut out = Vec::with_capacity(methods.len());
            // Per-rep view of the data under the chosen leakage policy.
            let prepared: std::result::Result<(DenseMatrix, DenseMatrix), String> = (|| {
                match mode {
                    Mode::Whole => {
                        let kept = select_cols(&x_std, &screening.selected_indices);
                        Ok((kept, y_std.clone()))
                    }
                    Mode::Split => {
                        let x_train = select_rows(&x_raw, train);
                        let (_, px) = standardize(&x_train, None).map_err(|e| e.to_string())?;
                        let x_all =
                            rrr_core::apply_standardization(&x_raw, &px).map_err(|e| e.to_string())?;
                        let y_train = select_rows(&y_raw, train);
                        let m_train = mask.select_rows(train).map_err(|e| e.to_string())?;
                        let (_, py) =
                            standardize(&y_train, Some(&m_train)).map_err(|e| e.to_string())?;
                        let mut y_all = rrr_core::apply_standardization(&y_raw, &py)
                            .map_err(|e| e.to_string())?;
                        for i in 0..n {
                            for j in 0..q {
                                if !mask.is_observed(i, j) {
                                    y_all[(i, j)] = 0.0;
                                }
                            }
                        }
                        let x_train_std = select_rows(&x_all, train);
                        let y_train_std = select_rows(&y_all, train);
                        let scr =
                            screen_predictors(&x_train_std, &y_train_std, &m_train, args.n_keep)
                                .map_err(|e| e.to_string())?;
                        Ok((select_cols(&x_all, &scr.selected_indices), y_all))
                    }
                }
            })();
            match prepared {
                Ok((x_kept, y_used)) => {
                    for &method in &methods {
                        let result = eval_on_split(
                            &x_kept, &y_used, &mask, train, test, method, &protocol, cv_seed,
                        );
                        out.push(RepOutcome {
                            rep,
                            method,
                            result,
                        });
                    }
                }
                Err(msg) => {
                    for &method in &methods {
                        out.push(RepOutcome {
                            rep,
                            method,
                            result: Err(msg.clone()),
                        });
                    }
                }
            }
            out
        })
        .flatten()
        .collect();

    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new("pipeline", args.seed);
    if let (Some(x), Some(y)) = (&args.x, &args.y) {
        manifest.add_input(x)?;
        manifest.add_input(y)?;
    }
    manifest.param("synthetic", args.synthetic);
    if args.synthetic {
        manifest.param("synth_n", args.synth_n);
        manifest.param("synth_p", args.synth_p);
        manifest.param("synth_q", args.synth_q);
        manifest.param("synth_rank", args.synth_rank);
        manifest.param("synth_noise_sd", args.synth_noise_sd);
    }
    manifest.param("n_keep", args.n_keep);
    manifest.param("n_test", args.n_test);
    manifest.param("reps", args.reps);
    manifest.param("methods", args.methods.clone());
    manifest.param("missing", args.missing);
    manifest.param("standardize", args.standardize.clone());
    manifest.param("k_folds", args.k_folds);
    manifest.param("n_lambda", args.n_lambda);
    manifest.param("lambda_min", args.lambda_min);
    manifest.param("cv_window", args.cv_window);
    manifest.param("tol", args.tol);
    manifest.param("max_iter", args.max_iter);
    manifest.param("rank_tol", args.rank_tol);

    // Screening and transform reference artifacts.
    let sel_rank: std::collections::HashMap<usize, usize> = screening
        .selected_indices
        .iter()
        .enumerate()
        .map(|(rank, &idx)| (idx, rank + 1))
        .collect();
    let scr_rows: Vec<Vec<String>> = (0..x_raw.cols())
        .map(|jx| {
            vec![
                format!("{jx}"),
                format!("{}", screening.scores[jx]),
                sel_rank
                    .get(&jx)
                    .map_or("0".to_string(), |r| format!("{r}")),
            ]
        })
        .collect();
    write_table_csv(
        &args.out_dir.join("screening.csv"),
        &["predictor", "score", "selection_rank"],
        &scr_rows,
    )?;
    let transform_rows = |p: &rrr_core::StandardizeParams| -> Vec<Vec<String>> {
        p.means
            .iter()
            .zip(&p.sds)
            .enumerate()
            .map(|(j, (m, s))| vec![format!("{j}"), format!("{m}"), format!("{s}")])
            .collect()
    };
    write_table_csv(
        &args.out_dir.join("transform_x.csv"),
        &["column", "mean", "sd"],
        &transform_rows(&x_params),
    )?;
    write_table_csv(
        &args.out_dir.join("transform_y.csv"),
        &["column", "mean", "sd"],
        &transform_rows(&y_params),
    )?;

    // Per-repetition results.
    let rep_rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok((mse, rank, tau, lambda)) => vec![
                format!("{}", o.rep),
                o.method.name().to_string(),
                format!("{mse}"),
                format!("{rank}"),
                format!("{tau}"),
                format!("{lambda}"),
                "ok".to_string(),
            ],
            Err(msg) => vec![
                format!("{}", o.rep),
                o.method.name().to_string(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                "NA".into(),
                format!("failed: {msg}"),
            ],
        })
        .collect();
    write_table_csv(
        &args.out_dir.join("per_rep.csv"),
        &[
            "repetition",
            "method",
            "prediction_mse",
            "rank",
            "selected_tau",
            "selected_lambda",
            "status",
        ],
        &rep_rows,
    )?;

    // Aggregate mean (sd) per method.
    let mean_sd_of = |values: &[f64]| -> (f64, f64) {
        if values.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (values.len() - 1) as f64)
                .sqrt()
        };
        (mean, sd)
    };
    let mut agg_rows = Vec::new();
    let mut human_rows = Vec::new();
    for &method in &methods {
        let ok: Vec<&(f64, usize, f64, f64)> = outcomes
            .iter()
            .filter(|o| o.method == method)
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        let mses: Vec<f64> = ok.iter().map(|t| t.0).collect();
        let ranks: Vec<f64> = ok.iter().map(|t| t.1 as f64).collect();
        let (m_mse, s_mse) = mean_sd_of(&mses);
        let (m_rank, s_rank) = mean_sd_of(&ranks);
        for (metric, mean, sd) in [
            ("prediction_mse", m_mse, s_mse),
            ("rank", m_rank, s_rank),
        ] {
            agg_rows.push(vec![
                method.name().to_string(),
                metric.to_string(),
                format!("{mean}"),
                format!("{sd}"),
            ]);
        }
        human_rows.push(vec![
            method.name().to_string(),
            mean_sd(m_mse, s_mse),
            mean_sd(m_rank, s_rank),
        ]);
    }
    write_table_csv(
        &args.out_dir.join("aggregate.csv"),
        &["method", "metric", "mean", "sd"],
        &agg_rows,
    )?;
    let mut text = format!(
        "pipeline: n={n} p={} screened={} q={q} reps={} n_test={} standardize={}\n",
        x_raw.cols(),
        args.n_keep,
        args.reps,
        args.n_test,
        args.standardize
    );
    text.push_str(&render_table(
        &["method", "prediction", "rank estimate"],
        &human_rows,
    ));
    let table_path = args.out_dir.join("table.txt");
    std::fs::write(&table_path, text).map_err(|e| io_err(&table_path, e))?;
    manifest.write(&args.out_dir)?;

    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    println!(
        "pipeline: {} repetitions x {} methods done ({} failures)",
        args.reps,
        methods.len(),
        failed
    );
    Ok(())
}

fn select_cols(m: &DenseMatrix, cols: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), cols.len());
    for i in 0..m.rows() {
        for (jj, &j) in cols.iter().enumerate() {
            out[(i, jj)] = m[(i, j)];
        }
    }
    out
}
