use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} lies outside the valid domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("link {link} is not compatible with loss {loss}")]
    Incompatible { link: &'static str, loss: &'static str },

    #[error("Newton iteration did not converge after {iterations} iterations (stationarity {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("confidence set is empty")]
    EmptyConfidenceSet,

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("could not pack {target} unit vectors in dimension {dim} with |<x,y>| <= {zeta} after {restarts} restarts")]
    PackingFailure {
        dim: usize,
        target: usize,
        zeta: f64,
        restarts: usize,
    },

    #[error("eluder step {step}: {reason}")]
    WitnessMismatch { step: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
