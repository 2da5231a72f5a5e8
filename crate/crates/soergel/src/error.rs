//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Coxeter type: {0}")]
    UnsupportedType(String),
    #[error("inconsistent rank for type {0}")]
    InconsistentRank(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("object mismatch: {0}")]
    ObjectMismatch(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("hom space dimension {got}, expected {expected}: {context}")]
    HomDimension {
        expected: usize,
        got: usize,
        context: String,
    },
    #[error("morphism is not closed: {0}")]
    NotClosed(String),
    #[error("twist does not square to zero")]
    TwistNotSquareZero,
    #[error("normalization entry is zero: {0}")]
    ZeroNormalization(String),
    #[error("braid words are not equal as braids: {0}")]
    BraidMismatch(String),
    #[error("negative letter in a positive-only braid word")]
    NegativeLetter,
    #[error("internal solver inconsistency: {0}")]
    SolverInconsistent(String),
    #[error("obstruction found: {0}")]
    Obstruction(String),
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("truncation {0} too small to hold the full sum")]
    TruncationTooSmall(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
