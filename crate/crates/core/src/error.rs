use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("quadrature did not converge after {evaluations} evaluations (error estimate {error:e}, target {target:e})")]
    Quadrature {
        evaluations: usize,
        error: f64,
        target: f64,
    },

    #[error("tail geometry constant undefined: {0}")]
    GeometryUndefined(String),

    #[error("regime {regime} not applicable: {reason}; try {suggestion}")]
    Regime {
        regime: &'static str,
        reason: String,
        suggestion: &'static str,
    },

    #[error("unreliable ratio: {0}")]
    Unreliable(String),

    #[error("quantile search failed: {0}")]
    Quantile(String),

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
