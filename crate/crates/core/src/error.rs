use thiserror::Error;

/// Errors surfaced by the library. Every variant names the violated precondition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid grain distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("intersection of {requested} bodies exceeds the configured cap of {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error(
        "{count} grains hit the window but inclusion-exclusion is limited to {limit}; \
         use the arrangement engine"
    )]
    TooManyGrains { count: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
