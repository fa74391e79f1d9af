use thiserror::Error;

/// Errors raised by kernels, samplers, estimators and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("{what} did not reach tolerance (achieved error estimate {estimate:.3e})")]
    Tolerance { what: String, estimate: f64 },
    #[error("outside regime: {0}")]
    Regime(String),
    #[error("unknown name `{name}`; known: {}", known.join(", "))]
    Lookup { name: String, known: Vec<String> },
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
