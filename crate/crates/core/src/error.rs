use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("array does not cover site {site:?}")]
    Coverage { site: Vec<i64> },

    #[error("entropy integral does not converge: {0}")]
    Divergence(String),

    #[error("{count} match lengths hit the sampled margin; enlarge the margin")]
    Saturated { count: usize },

    #[error("oracle refused: {0}")]
    OracleRefused(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
