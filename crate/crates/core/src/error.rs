use thiserror::Error;

/// Errors raised by the evaluators, quadrature engine and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature failed on [{a}, {b}]: error estimate {estimate:e} exceeds tolerance {tolerance:e} ({panels} panels)")]
    QuadratureFailure {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
        panels: usize,
    },

    #[error("integrand returned a non-finite value ({value}) at {at}")]
    NonFiniteIntegrand { at: f64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported kernel parameter gamma = {0}; only gamma = -1 has a closed-form kernel")]
    UnsupportedGamma(f64),

    #[error("singularity mismatch: {0}")]
    SingularityMismatch(String),

    #[error("CFL violation: {0}")]
    CflViolation(String),

    #[error("blow-up detected at t = {time}: non-finite value in grid field")]
    BlowupDetected { time: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
