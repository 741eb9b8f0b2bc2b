use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("infeasible selection: {0}")]
    InfeasibleSelection(String),
    #[error("rate table incomplete for candidate {0}")]
    IncompleteTable(usize),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("no codebook for alpha = {0}")]
    MissingCodebook(usize),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NotHermitian(_) => "not_hermitian",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidConfig(_) => "invalid_config",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InfeasibleSelection(_) => "infeasible_selection",
            Error::IncompleteTable(_) => "incomplete_table",
            Error::NonConvergence { .. } => "non_convergence",
            Error::MissingCodebook(_) => "missing_codebook",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
