//! Huber loss, its clipped derivative, and the masked smooth objective term.

use crate::error::{CoreError, Result};
use crate::matrix::{DenseMatrix, ObservationMask};

/// Huber threshold. `HuberParam::infinite()` is the exact squared-loss
/// sentinel used for the non-robust baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParam {
    tau: f64,
}

impl HuberParam {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "huber threshold must be positive or infinite, got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    /// Squared-loss sentinel: huber reduces to u^2/2 for every u.
    pub fn infinite() -> Self {
        Self { tau: f64::INFINITY }
    }

    pub fn value(&self) -> f64 {
        self.tau
    }

    pub fn is_infinite(&self) -> bool {
        self.tau.is_infinite()
    }
}

/// Pointwise Huber loss: u^2/2 inside the threshold, linear outside.
pub fn huber(u: f64, tau: HuberParam) -> f64 {
    let t = tau.tau;
    let au = u.abs();
    if au <= t {
        0.5 * u * u
    } else {
        t * au - 0.5 * t * t
    }
}

/// Clipped score psi(u) = sign(u) * min(|u|, tau), the derivative of `huber`.
pub fn psi(u: f64, tau: HuberParam) -> f64 {
    let t = tau.tau;
    if u.abs() <= t {
        u
    } else {
        t * u.signum()
    }
}

fn check_shapes(
    y: &DenseMatrix,
    x: &DenseMatrix,
    b: &DenseMatrix,
    mask: &ObservationMask,
) -> Result<()> {
    if x.cols() != b.rows() {
        return Err(CoreError::ShapeMismatch {
            op: "loss: X * B",
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    if y.rows() != x.rows() || y.cols() != b.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "loss: Y vs X*B",
            left_rows: y.rows(),
            left_cols: y.cols(),
            right_rows: x.rows(),
            right_cols: b.cols(),
        });
    }
    if mask.rows() != y.rows() || mask.cols() != y.cols() {
        return Err(CoreError::ShapeMismatch {
            op: "loss: mask vs Y",
            left_rows: mask.rows(),
            left_cols: mask.cols(),
            right_rows: y.rows(),
            right_cols: y.cols(),
        });
    }
    Ok(())
}

/// Masked smooth objective term: (1/n) * sum over observed (i,j) of
/// huber(Y_ij - (XB)_ij). The normalization is 1/n, not 1/|observed|; the
/// cross-validation criterion normalizes held-out errors separately.
pub fn loss(
    y: &DenseMatrix,
    x: &DenseMatrix,
    b: &DenseMatrix,
    mask: &ObservationMask,
    tau: HuberParam,
) -> Result<f64> {
    check_shapes(y, x, b, mask)?;
    let pred = x.matmul(b)?;
    let n = x.rows() as f64;
    let mut acc = 0.0;
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            if mask.is_observed(i, j) {
                acc += huber(y[(i, j)] - pred[(i, j)], tau);
            }
        }
    }
    Ok(acc / n)
}

/// Gradient of `loss` in B: -(1/n) X^T Psi, where Psi holds the clipped
/// scores on observed entries and exact zeros elsewhere. Unobserved Y values
/// never reach the accumulation, so they cannot influence the result.
pub fn gradient(
    y: &DenseMatrix,
    x: &DenseMatrix,
    b: &DenseMatrix,
    mask: &ObservationMask,
    tau: HuberParam,
) -> Result<DenseMatrix> {
    check_shapes(y, x, b, mask)?;
    let pred = x.matmul(b)?;
    let mut scores = DenseMatrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            if mask.is_observed(i, j) {
                scores[(i, j)] = psi(y[(i, j)] - pred[(i, j)], tau);
            }
        }
    }
    let g = x.transpose_matmul(&scores)?;
    Ok(g.scale(-1.0 / x.rows() as f64))
}
