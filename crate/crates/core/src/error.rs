use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("measure parameters out of domain: {0}")]
    MeasureDomain(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("quadrature failure (residual estimate {residual:e})")]
    Quadrature { residual: f64 },

    #[error("degenerate spacing: {0}")]
    DegenerateSpacing(String),

    #[error("invalid estimator configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("initial estimate outside validity region: gamma_bar = {0}")]
    InitialEstimate(f64),

    #[error("objective is degenerate: {0}")]
    DegenerateObjective(String),

    #[error("objective undefined on box")]
    ObjectiveUndefined,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
