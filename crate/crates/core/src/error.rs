use thiserror::Error;

/// Errors produced by the library.
///
/// Blowup of a simulated path is never an error; it is reported as a verdict.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: field has {found} nodes, grid has {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge after {iterations} iterations (last change {last_change:e})")]
    EigenNotConverged { iterations: usize, last_change: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("covariance matrix is not positive semidefinite (pivot {index} = {pivot:e} after jitter)")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown oracle `{name}`; valid names: {valid}")]
    UnknownOracle { name: String, valid: String },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("run `{0}` not found")]
    RunNotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
