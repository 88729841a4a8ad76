//! Tuning-grid construction and K-fold cross-validation over (tau, lambda).
//!
//! The lambda grid is log-spaced from a data-driven lambda_max (largest
//! singular value of the masked cross-covariance) down to a fixed
//! lambda_min. Validation error is the squared error over observed held-out
//! entries, normalized by their count.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::loss::HuberParam;
use crate::matrix::{select_rows, spectral_norm, DenseMatrix, ObservationMask};
use crate::rng::{stream, StreamPurpose};
use crate::solver::{fit, fit_warm, predict, FitConfig, FitResult};
use rand::seq::SliceRandom;

pub const DEFAULT_TAU_GRID: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_N_LAMBDA: usize = 20;
pub const DEFAULT_LAMBDA_MIN: f64 = 0.05;
pub const DEFAULT_K_FOLDS: usize = 5;

/// Default width of the selection window, as a fraction of the CV curve's
/// explained range (null-level minus minimum). 0 selects the exact minimizer.
/// MCP/SCAD solutions are piecewise constant in lambda, so the CV valley is
/// flat and the strict argmin follows fold noise off the plateau; the window
/// picks the most parsimonious pair statistically indistinguishable from the
/// minimum.
pub const DEFAULT_CV_WINDOW: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct TuningGrid {
    /// Candidate Huber thresholds; `f64::INFINITY` marks the squared-loss
    /// baseline.
    pub taus: Vec<f64>,
    /// Candidate penalty strengths, strictly descending.
    pub lambdas: Vec<f64>,
}

impl TuningGrid {
    pub fn new(taus: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(CoreError::InvalidGrid("tau grid is empty".into()));
        }
        if taus.iter().any(|&t| !(t > 0.0)) {
            return Err(CoreError::InvalidGrid(
                "tau grid entries must be positive (or infinite)".into(),
            ));
        }
        if lambdas.is_empty() {
            return Err(CoreError::InvalidGrid("lambda grid is empty".into()));
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(CoreError::InvalidGrid(
                "lambda grid entries must be positive and finite".into(),
            ));
        }
        if lambdas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(CoreError::InvalidGrid(
                "lambda grid must be strictly descending".into(),
            ));
        }
        Ok(Self { taus, lambdas })
    }
}

/// Masked cross-covariance C (p x q): column j is the average of X rows over
/// the entries where response j is observed, weighted by Y_ij.
pub fn cross_covariance(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mask: &ObservationMask,
) -> Result<DenseMatrix> {
    if x.rows() != y.rows() || mask.rows() != y.rows() || mask.cols() != y.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "cross_covariance",
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: y.rows(),
            right_cols: y.cols(),
        });
    }
    let (p, q) = (x.cols(), y.cols());
    let mut c = DenseMatrix::zeros(p, q);
    for j in 0..q {
        let mut count = 0usize;
        for i in 0..y.rows() {
            if mask.is_observed(i, j) {
                count += 1;
                let yij = y[(i, j)];
                let xi = x.row(i);
                for k in 0..p {
                    c[(k, j)] += xi[k] * yij;
                }
            }
        }
        if count == 0 {
            return Err(CoreError::EmptyColumn { column: j });
        }
        let inv = 1.0 / count as f64;
        for k in 0..p {
            c[(k, j)] *= inv;
        }
    }
    Ok(c)
}

/// Largest singular value of the masked cross-covariance: the smallest
/// penalty level at which the fitted matrix is zero.
pub fn lambda_max(x: &DenseMatrix, y: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    let c = cross_covariance(x, y, mask)?;
    let s = spectral_norm(&c)?;
    if s == 0.0 {
        return Err(CoreError::DegenerateCrossCovariance);
    }
    Ok(s)
}

/// Log-spaced grid from `hi` down to `lo` inclusive, with exact endpoints.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(CoreError::InvalidGrid("n_lambda must be >= 1".into()));
    }
    if !(hi > lo) {
        return Err(CoreError::DegenerateGrid {
            lambda_max: hi,
            lambda_min: lo,
        });
    }
    if n == 1 {
        return Ok(vec![hi]);
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (lh + (ll - lh) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = hi;
    grid[n - 1] = lo;
    Ok(grid)
}

/// Grid with the default tau candidates {0.1, 1, 10} and n_lambda log-spaced
/// penalty levels from the data's lambda_max down to lambda_min.
pub fn build_grid(
    x: &DenseMatrix,
    y: &DenseMatrix,
    mask: &ObservationMask,
    n_lambda: usize,
    lambda_min: f64,
) -> Result<TuningGrid> {
    let lmax = lambda_max(x, y, mask)?;
    let lambdas = log_grid(lmax, lambda_min, n_lambda)?;
    TuningGrid::new(DEFAULT_TAU_GRID.to_vec(), lambdas)
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Mean validation MSE over contributing folds; taus x lambdas.
    pub mean_mse: DenseMatrix,
    /// Per-fold validation MSE; `None` when the fold had no observed
    /// validation entries. Indexed [tau][lambda][fold].
    pub fold_mse: Vec<Vec<Vec<Option<f64>>>>,
    pub selected_tau: f64,
    pub selected_lambda: f64,
    pub selected_tau_idx: usize,
    pub selected_lambda_idx: usize,
    /// Fold index of every training row.
    pub fold_assignment: Vec<usize>,
    pub warnings: Vec<String>,
    /// Refit on the full data at the selected pair, from zero.
    pub final_fit: FitResult,
}

/// Pick (tau_idx, lambda_idx): the exact minimizer when `window == 0` (ties
/// toward larger lambda, then larger tau), otherwise the most parsimonious
/// pair whose mean MSE is within `window * (null - min)` of the minimum,
/// where `null` is the lambda_max entry of the minimizer's tau row.
fn select_pair(mean: &DenseMatrix, window: f64) -> (usize, usize) {
    let (n_tau, n_lambda) = (mean.rows(), mean.cols());
    let mut best = (0usize, 0usize);
    let mut best_val = f64::INFINITY;
    for li in 0..n_lambda {
        for ti in (0..n_tau).rev() {
            let v = mean[(ti, li)];
            if v < best_val {
                best_val = v;
                best = (ti, li);
            }
        }
    }
    if window <= 0.0 {
        return best;
    }
    let null_level = mean[(best.0, 0)];
    let threshold = best_val + window * (null_level - best_val).max(0.0);
    for li in 0..n_lambda {
        for ti in (0..n_tau).rev() {
            if mean[(ti, li)] <= threshold {
                return (ti, li);
            }
        }
    }
    best
}

/// Row-wise K-fold cross-validation jointly over the (tau, lambda) grid.
///
/// Rows are shuffled once under `seed` and split into K contiguous chunks
/// whose sizes differ by at most one. For each (tau, fold) the lambda path is
/// swept descending with warm starts; the final reported fit restarts from
/// zero on the full data. (tau, fold) pairs are evaluated in parallel and
/// reduced in a fixed order, so the report does not depend on thread count.
pub fn cross_validate(
    y: &DenseMatrix,
    x: &DenseMatrix,
    mask: &ObservationMask,
    grid: &TuningGrid,
    k: usize,
    seed: u64,
    base: &FitConfig,
    window: f64,
) -> Result<CvReport> {
    let n = x.rows();
    if k < 2 {
        return Err(CoreError::InvalidGrid(format!(
            "k-fold cross-validation needs k >= 2, got {k}"
        )));
    }
    if n < k {
        return Err(CoreError::InvalidGrid(format!(
            "cannot split {n} rows into {k} folds"
        )));
    }

    // One seeded shuffle; fold f takes the f-th contiguous chunk.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, StreamPurpose::Folds));
    let base_size = n / k;
    let remainder = n % k;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base_size + usize::from(f < remainder);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    let mut fold_assignment = vec![0usize; n];
    for (f, rows) in folds.iter().enumerate() {
        for &r in rows {
            fold_assignment[r] = f;
        }
    }

    // A fold contributes only if it holds at least one observed entry.
    let fold_observed: Vec<usize> = folds
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|&i| (0..y.cols()).filter(|&j| mask.is_observed(i, j)).count())
                .sum()
        })
        .collect();
    if fold_observed.iter().all(|&c| c == 0) {
        return Err(CoreError::AllFoldsEmpty);
    }
    let mut warnings = Vec::new();
    for (f, &c) in fold_observed.iter().enumerate() {
        if c == 0 {
            warnings.push(format!(
                "fold {f} has no observed validation entries and was skipped"
            ));
        }
    }

    let n_tau = grid.taus.len();
    let n_lambda = grid.lambdas.len();
    let work: Vec<(usize, usize)> = (0..n_tau)
        .flat_map(|ti| (0..k).map(move |f| (ti, f)))
        .collect();

    let path_results: Vec<Vec<Option<f64>>> = work
        .par_iter()
        .map(|&(ti, f)| -> Result<Vec<Option<f64>>> {
            if fold_observed[f] == 0 {
                return Ok(vec![None; n_lambda]);
            }
            let val_rows = &folds[f];
            let train_rows: Vec<usize> =
                (0..n).filter(|r| fold_assignment[*r] != f).collect();
            let x_train = select_rows(x, &train_rows);
            let y_train = select_rows(y, &train_rows);
            let m_train = mask.select_rows(&train_rows)?;
            let x_val = select_rows(x, val_rows);
            let y_val = select_rows(y, val_rows);

            let tau = HuberParam::new(grid.taus[ti])
                .unwrap_or_else(|_| HuberParam::infinite());
            let mut config = base.clone();
            config.tau = tau;

            let mut mse_path = Vec::with_capacity(n_lambda);
            let mut warm: Option<DenseMatrix> = None;
            for &lam in &grid.lambdas {
                config.penalty = config.penalty.with_lambda(lam)?;
                let fitted = match &warm {
                    Some(b) => fit_warm(&y_train, &x_train, &m_train, &config, b)?,
                    None => fit(&y_train, &x_train, &m_train, &config)?,
                };
                let pred = predict(&x_val, &fitted.b_hat)?;
                let mut sq = 0.0;
                let mut count = 0usize;
                for (local, &row) in val_rows.iter().enumerate() {
                    for j in 0..y.cols() {
                        if mask.is_observed(row, j) {
                            let d = y_val[(local, j)] - pred[(local, j)];
                            sq += d * d;
                            count += 1;
                        }
                    }
                }
                debug_assert!(count > 0);
                mse_path.push(Some(sq / count as f64));
                warm = Some(fitted.b_hat);
            }
            Ok(mse_path)
        })
        .collect::<Result<Vec<_>>>()?;

    // Ordered reduction into [tau][lambda][fold] and the fold-mean surface.
    let mut fold_mse = vec![vec![vec![None; k]; n_lambda]; n_tau];
    for (w, path) in work.iter().zip(path_results) {
        let (ti, f) = *w;
        for (li, v) in path.into_iter().enumerate() {
            fold_mse[ti][li][f] = v;
        }
    }
    let mut mean_mse = DenseMatrix::zeros(n_tau, n_lambda);
    for ti in 0..n_tau {
        for li in 0..n_lambda {
            let vals: Vec<f64> = fold_mse[ti][li].iter().flatten().copied().collect();
            mean_mse[(ti, li)] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
    }

    let (sel_ti, sel_li) = select_pair(&mean_mse, window);
    let mut final_config = base.clone();
    final_config.tau = HuberParam::new(grid.taus[sel_ti])
        .unwrap_or_else(|_| HuberParam::infinite());
    final_config.penalty = final_config.penalty.with_lambda(grid.lambdas[sel_li])?;
    let final_fit = fit(y, x, mask, &final_config)?;

    Ok(CvReport {
        taus: grid.taus.clone(),
        lambdas: grid.lambdas.clone(),
        mean_mse,
        fold_mse,
        selected_tau: grid.taus[sel_ti],
        selected_lambda: grid.lambdas[sel_li],
        selected_tau_idx: sel_ti,
        selected_lambda_idx: sel_li,
        fold_assignment,
        warnings,
        final_fit,
    })
}
