//! CLI error wrapper with a machine-parsable category per failure class.

use rrr_core::CoreError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    InvalidArgs(String),
    Scenario {
        path: String,
        line: Option<usize>,
        msg: String,
    },
    Io {
        path: String,
        source: std::io::Error,
    },
    Json(serde_json::Error),
}

impl CliError {
    /// Stable category token, printed as `error[<category>]: ...`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                CoreError::ShapeMismatch { .. } => "shape-mismatch",
                CoreError::NonFinite { .. }
                | CoreError::EmptyMatrix { .. }
                | CoreError::DataLength { .. }
                | CoreError::ZeroDesign => "invalid-input",
                CoreError::EmptyMask | CoreError::EmptyColumn { .. } => "invalid-mask",
                CoreError::SvdNoConvergence { .. } => "svd-failure",
                CoreError::InvalidPenalty(_) => "invalid-penalty",
                CoreError::InvalidConfig(_) => "invalid-config",
                CoreError::NonFiniteObjective { .. } => "diverged",
                CoreError::DegenerateCrossCovariance
                | CoreError::DegenerateGrid { .. }
                | CoreError::InvalidGrid(_)
                | CoreError::AllFoldsEmpty => "degenerate-grid",
                CoreError::InvalidScenario(_) => "invalid-scenario",
                CoreError::ZeroVariance { .. } => "zero-variance",
                CoreError::InvalidSplit(_) => "invalid-split",
                CoreError::Csv { .. } => "csv-parse",
                CoreError::Io { .. } => "io",
            },
            CliError::InvalidArgs(_) => "invalid-args",
            CliError::Scenario { .. } => "invalid-scenario",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::InvalidArgs(msg) => write!(f, "{msg}"),
            CliError::Scenario { path, line, msg } => match line {
                Some(l) => write!(f, "{path}: line {l}: {msg}"),
                None => write!(f, "{path}: {msg}"),
            },
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Json(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Json(e)
    }
}

pub fn io_err(path: &std::path::Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
