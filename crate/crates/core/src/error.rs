//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by library operations.
///
/// `BudgetExceeded` is recoverable by raising the relevant [`crate::Budget`]
/// field; `Internal` indicates a broken invariant and is always a bug.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configured resource budget ran out before the computation finished.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Integer arithmetic left the supported range.
    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// The inputs fail a hypothesis an operation needs for its conclusion
    /// (named, so callers can report exactly which one).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// An invariant the implementation guarantees did not hold.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
