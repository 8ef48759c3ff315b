//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad node index, self-loop, parse failure, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A request beyond the enumeration or geometry budget.
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    /// Hull geometry only supports feature dimension 1 or 2 (extended 2-D/3-D).
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// Numerical failure (non-finite objective, bracket collapse, rejection cap, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Bad run configuration (e.g. Monte-Carlo sample size below the floor).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn unsupported_size(msg: impl Into<String>) -> Self {
        Error::UnsupportedSize(msg.into())
    }

    pub fn unsupported_dimension(msg: impl Into<String>) -> Self {
        Error::UnsupportedDimension(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
