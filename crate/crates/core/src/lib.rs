//! Robust reduced-rank multivariate regression.
//!
//! Fits a low-rank coefficient matrix B in Y ~ X B by minimizing a masked
//! Huber loss plus a nonconvex spectral penalty (MCP or SCAD, with the
//! nuclear norm as the convex baseline) via proximal gradient descent.
//! Missing responses are handled through an observation mask, without
//! imputation; tau = infinity turns the Huber loss into exact squared loss,
//! giving the non-robust baseline inside the same code path.
//!
//! Module map:
//! - [`matrix`]: dense matrices, masks, and the Jacobi SVD kernel.
//! - [`loss`]: Huber loss, clipped scores, masked loss/gradient.
//! - [`penalty`]: scalar and spectral proximal operators, penalty values.
//! - [`solver`]: the proximal gradient loop, step sizes, rank extraction.
//! - [`tuning`]: lambda grids and K-fold cross-validation over (tau, lambda).
//! - [`sim`]: seeded scenario generation, metrics, replicate sweeps.
//! - [`pipeline`]: standardization, predictor screening, repeated splits.
//! - [`io`]: CSV ingestion/emission with missing-value handling.

pub mod error;
pub mod io;
pub mod loss;
pub mod matrix;
pub mod penalty;
pub mod pipeline;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod tuning;

pub use error::{CoreError, Result};
pub use loss::{gradient, huber, loss, psi, HuberParam};
pub use matrix::{
    masked_difference, select_rows, spectral_norm, svd, DenseMatrix, ObservationMask, SvdResult,
};
pub use penalty::{
    penalty_of_matrix, penalty_value, scalar_prox, scaled_prox, spectral_prox,
    spectral_prox_scaled, PenaltyFamily, PenaltySpec,
};
pub use pipeline::{
    apply_standardization, repeated_splits, screen_predictors, standardize, ScreeningResult,
    StandardizeParams,
};
pub use sim::{
    apply_contamination, generate, metrics, metrics_with, run_replicates, ContaminationMode,
    DesignSpec, ErrorNorm, Method, MethodProtocol, NoiseSpec, ReplicateTable, SimData, SimReport,
    SimScenario,
};
pub use solver::{
    estimated_rank, fit, fit_warm, lipschitz_step, predict, FitConfig, FitResult, StepSize,
};
pub use tuning::{
    build_grid, cross_covariance, cross_validate, lambda_max, log_grid, CvReport, TuningGrid,
};
