//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("matrix entry at row {row}, col {col} is not finite ({value})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {got} does not match shape {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, got: usize },

    #[error("observation mask has no observed entries")]
    EmptyMask,

    #[error("SVD did not converge after {sweeps} sweeps on a {rows}x{cols} matrix")]
    SvdNoConvergence {
        rows: usize,
        cols: usize,
        sweeps: usize,
    },

    #[error("invalid penalty parameters: {0}")]
    InvalidPenalty(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("objective became non-finite at iteration {iteration}; the step size is too large")]
    NonFiniteObjective { iteration: usize },

    #[error("design matrix is zero; the Lipschitz step size is undefined")]
    ZeroDesign,

    #[error("response column {column} has no observed entries")]
    EmptyColumn { column: usize },

    #[error("cross-covariance matrix is zero; supply non-degenerate data")]
    DegenerateCrossCovariance,

    #[error(
        "lambda_max ({lambda_max}) is not above lambda_min ({lambda_min}); lower lambda_min"
    )]
    DegenerateGrid { lambda_max: f64, lambda_min: f64 },

    #[error("invalid tuning setup: {0}")]
    InvalidGrid(String),

    #[error("no cross-validation fold had observed validation entries")]
    AllFoldsEmpty,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("column {column} has fewer than two observed entries or zero variance; cannot standardize")]
    ZeroVariance { column: usize },

    #[error("invalid split request: {0}")]
    InvalidSplit(String),

    #[error("{path}: {msg}")]
    Csv { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
