use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two observations share a value within one column.
    #[error("tied values in column {column}: {value}")]
    TiesDetected { column: usize, value: f64 },

    #[error("size guard violated: {0}")]
    SizeGuard(String),

    #[error("Cholesky factorisation failed: {0}")]
    Cholesky(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {objective:e} at {theta:?})")]
    NotConverged {
        theta: Vec<f64>,
        objective: f64,
        iterations: usize,
    },

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    /// All multipliers of a bootstrap draw were zero; the caller should redraw.
    #[error("degenerate resample: {0}")]
    ResampleDegenerate(String),

    #[error("true stdf oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TiesDetected { .. } => "ties_detected",
            Error::SizeGuard(_) => "size_guard",
            Error::Cholesky(_) => "cholesky",
            Error::NotConverged { .. } => "not_converged",
            Error::InfeasibleBounds(_) => "infeasible_bounds",
            Error::ResampleDegenerate(_) => "resample_degenerate",
            Error::OracleUnavailable(_) => "oracle_unavailable",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
