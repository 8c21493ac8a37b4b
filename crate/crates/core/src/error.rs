use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Cloner noise variances violate `σ₁²·σ₂² ≥ 1/4`.
    #[error("uncertainty violation: sigma1_sq * sigma2_sq = {product} < 1/4")]
    UncertaintyViolation { product: f64 },

    #[error("state error: {0}")]
    State(String),

    /// Two routes that must agree did not. Always an implementation bug.
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
