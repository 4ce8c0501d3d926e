use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("set has zero measure")]
    DegenerateSet,
    #[error("tail sum diverges: beta*p = {0} <= 1")]
    DivergentTail(f64),
    #[error("grid of size {grid} cannot resolve |n| <= {k}")]
    GridTooSmall { grid: usize, k: usize },
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("exponential overflow: profile height {0} exceeds the f64 range; use a smaller 1/delta or larger eps")]
    ExpOverflow(f64),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("missing table {0}")]
    MissingTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
