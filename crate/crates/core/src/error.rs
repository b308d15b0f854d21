use thiserror::Error;

/// Errors raised by tensor construction, reshaping and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the operation's domain (bad index, wrong order parity, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimensions of the operands do not fit together.
    #[error("shape error: {0}")]
    Shape(String),

    /// The input is degenerate for the requested operation (zero tensor, zero block).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A brute-force routine was asked to run on an instance beyond its size guard.
    #[error("cost guard: {0}")]
    CostGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}
