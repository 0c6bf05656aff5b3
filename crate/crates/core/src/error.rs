use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty word")]
    EmptyWord,
    #[error("every word in the list is empty")]
    EmptyList,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("gauge h is undefined at x = {0} (requires x > 0)")]
    GaugeDomain(f64),
    #[error("density bound M is required for the tail term")]
    MissingDensityBound,
    #[error("drift is not monotone near x = {x}")]
    NonMonotoneDrift { x: f64 },
    #[error("selected classes are not totally ordered: {0}")]
    NotTotallyOrdered(String),
    #[error("compact frame rejected: {0}")]
    FrameRejected(String),
    #[error("word list is not stitchable: {0}")]
    NotStitchable(String),
    #[error("length budget violated: {0}")]
    LengthBudget(String),
    #[error("sliced words come from different frames")]
    FrameMismatch,
    #[error("letter budget violated on side {side}: |u|_{side} = {count} > {limit}")]
    LetterBudget { side: usize, count: usize, limit: f64 },
    #[error("side conditions violated: {}", .0.join("; "))]
    SideConditions(Vec<String>),
    #[error("pf integration error {error:.3e} too large for objective {objective:.3e}")]
    IntegrationError { error: f64, objective: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
