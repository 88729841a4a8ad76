//! Proximal gradient solver for the masked Huber objective with a spectral
//! penalty: gradient step on the smooth part, exact spectral prox of the
//! step-scaled penalty, constant step 1/L with L = ||X||_2^2 / n.

use crate::error::{CoreError, Result};
use crate::loss::{gradient, loss, HuberParam};
use crate::matrix::{spectral_norm, DenseMatrix, ObservationMask};
use crate::penalty::{penalty_value, spectral_prox_scaled, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// 1 / L_X with L_X = ||X||_2^2 / n.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub tau: HuberParam,
    pub penalty: PenaltySpec,
    pub step_size: StepSize,
    /// Frobenius-norm convergence threshold on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative cut defining the reported rank.
    pub rank_tol_rel: f64,
}

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_RANK_TOL_REL: f64 = 1e-6;

impl FitConfig {
    pub fn new(tau: HuberParam, penalty: PenaltySpec) -> Self {
        Self {
            tau,
            penalty,
            step_size: StepSize::Auto,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            rank_tol_rel: DEFAULT_RANK_TOL_REL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(CoreError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.rank_tol_rel > 0.0 && self.rank_tol_rel < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "rank_tol_rel must lie in (0, 1), got {}",
                self.rank_tol_rel
            )));
        }
        if let StepSize::Fixed(a) = self.step_size {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CoreError::InvalidConfig(format!(
                    "step size must be positive and finite, got {a}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub b_hat: DenseMatrix,
    /// Singular values of `b_hat` after the final thresholding, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Masked Huber loss plus penalty, one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Step size 1 / L_X = n / ||X||_2^2.
pub fn lipschitz_step(x: &DenseMatrix, n: usize) -> Result<f64> {
    let s = spectral_norm(x)?;
    if s == 0.0 {
        return Err(CoreError::ZeroDesign);
    }
    Ok(n as f64 / (s * s))
}

/// Count of singular values above `rank_tol_rel * max`; 0 for an all-zero
/// (or empty) spectrum.
pub fn estimated_rank(singular_values: &[f64], rank_tol_rel: f64) -> usize {
    let max = singular_values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    let cut = rank_tol_rel * max;
    singular_values.iter().filter(|&&s| s > cut).count()
}

/// X_new * B_hat.
pub fn predict(x_new: &DenseMatrix, b_hat: &DenseMatrix) -> Result<DenseMatrix> {
    x_new.matmul(b_hat)
}

/// Minimize the masked Huber objective plus spectral penalty, starting from
/// B = 0. Stops when the Frobenius change of the iterate drops below
/// `config.tol` or after `config.max_iter` iterations.
pub fn fit(
    y: &DenseMatrix,
    x: &DenseMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
) -> Result<FitResult> {
    let b0 = DenseMatrix::zeros(x.cols(), y.cols());
    fit_warm(y, x, mask, config, &b0)
}

/// Same as [`fit`] but starting from `b_init`; used for warm starts along a
/// lambda path. Reported fits should restart from zero so results are
/// path-independent.
pub fn fit_warm(
    y: &DenseMatrix,
    x: &DenseMatrix,
    mask: &ObservationMask,
    config: &FitConfig,
    b_init: &DenseMatrix,
) -> Result<FitResult> {
    config.validate()?;
    if b_init.rows() != x.cols() || b_init.cols() != y.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "fit: warm start",
            left_rows: b_init.rows(),
            left_cols: b_init.cols(),
            right_rows: x.cols(),
            right_cols: y.cols(),
        });
    }
    let step = match config.step_size {
        StepSize::Auto => lipschitz_step(x, x.rows())?,
        StepSize::Fixed(a) => a,
    };

    let mut b = b_init.clone();
    let mut trace = Vec::new();
    let mut singular_values = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..config.max_iter {
        let g = gradient(y, x, &b, mask, config.tau)?;
        let m = b.sub(&g.scale(step))?;
        if m.data().iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteObjective { iteration: iter });
        }
        let (b_next, spectrum) = spectral_prox_scaled(&m, &config.penalty, step)?;

        // The prox already exposes the exact spectrum of b_next, so the
        // penalty term needs no extra SVD.
        let smooth = loss(y, x, &b_next, mask, config.tau)?;
        let objective: f64 = smooth
            + spectrum
                .iter()
                .map(|&s| penalty_value(s, &config.penalty))
                .sum::<f64>();
        if !objective.is_finite() {
            return Err(CoreError::NonFiniteObjective { iteration: iter });
        }
        trace.push(objective);

        let delta = b_next.frobenius_distance(&b)?;
        b = b_next;
        singular_values = spectrum;
        iterations = iter + 1;
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let rank = estimated_rank(&singular_values, config.rank_tol_rel);
    Ok(FitResult {
        b_hat: b,
        singular_values,
        rank,
        objective_trace: trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyFamily;

    fn huber(v: f64) -> HuberParam {
        HuberParam::new(v).unwrap()
    }

    #[test]
    fn lipschitz_step_examples() {
        let i4 = DenseMatrix::identity(4);
        assert!((lipschitz_step(&i4, 4).unwrap() - 4.0).abs() < 1e-12);

        let two_i3 = DenseMatrix::identity(3).scale(2.0);
        assert!((lipschitz_step(&two_i3, 3).unwrap() - 0.75).abs() < 1e-12);

        let x = crate::matrix::tests_support::random(20, 6, 31);
        let alpha = lipschitz_step(&x, 20).unwrap();
        let s = spectral_norm(&x).unwrap();
        assert!((alpha * s * s / 20.0 - 1.0).abs() < 1e-8);

        assert!(lipschitz_step(&DenseMatrix::zeros(3, 2), 3).is_err());
    }

    #[test]
    fn estimated_rank_examples() {
        assert_eq!(estimated_rank(&[3.0, 1e-9, 0.0], 1e-6), 1);
        assert_eq!(estimated_rank(&[], 1e-6), 0);
        assert_eq!(estimated_rank(&[0.0, 0.0], 1e-6), 0);
        assert_eq!(estimated_rank(&[5.0, 1.5, 0.0], 1e-6), 2);
    }

    #[test]
    fn predict_examples() {
        let b = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let zero_b = DenseMatrix::zeros(2, 2);
        let x = DenseMatrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(predict(&x, &zero_b).unwrap().is_zero());
        let id = DenseMatrix::identity(2);
        assert_eq!(predict(&id, &b).unwrap(), b);
        let out = predict(&x, &b).unwrap();
        assert_eq!(out.data(), &[4.0, 6.0]);
        let bad = DenseMatrix::zeros(1, 3);
        assert!(predict(&bad, &b).is_err());
    }

    #[test]
    fn zero_response_fixed_point() {
        let x = crate::matrix::tests_support::random(8, 3, 5);
        let y = DenseMatrix::zeros(8, 2);
        let mask = ObservationMask::fully_observed(8, 2);
        let config = FitConfig::new(
            huber(1.0),
            PenaltySpec::new(PenaltyFamily::Mcp, 0.5, 3.0).unwrap(),
        );
        let fit = fit(&y, &x, &mask, &config).unwrap();
        assert!(fit.b_hat.is_zero());
        assert_eq!(fit.rank, 0);
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
        assert_eq!(fit.objective_trace, vec![0.0]);
    }

    #[test]
    fn oversized_fixed_step_reports_divergence() {
        let x = crate::matrix::tests_support::random(10, 4, 6);
        let b0 = crate::matrix::tests_support::random(4, 3, 7);
        let y = x.matmul(&b0).unwrap();
        let mask = ObservationMask::fully_observed(10, 3);
        let mut config = FitConfig::new(
            HuberParam::infinite(),
            PenaltySpec::nuclear(1e-4).unwrap(),
        );
        config.step_size = StepSize::Fixed(1e160);
        match fit(&y, &x, &mask, &config) {
            Err(CoreError::NonFiniteObjective { .. }) => {}
            other => panic!("expected divergence error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = FitConfig::new(huber(1.0), PenaltySpec::nuclear(0.1).unwrap());
        c.tol = 0.0;
        assert!(c.validate().is_err());
        c.tol = 1e-5;
        c.max_iter = 0;
        assert!(c.validate().is_err());
        c.max_iter = 10;
        c.rank_tol_rel = 1.0;
        assert!(c.validate().is_err());
    }
}
