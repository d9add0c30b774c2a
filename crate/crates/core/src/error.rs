use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {needed} usable blocks for a regularity fit, found {found}")]
    TooFewBlocks { needed: usize, found: usize },

    #[error("ansatz contraction estimate {estimate:.3e} is not below 1/2; increase N")]
    ContractionTooLarge { estimate: f64 },

    #[error("fixed-point inverse did not converge in {iterations} iterations (residual {residual:.3e})")]
    GammaNotConverged { iterations: usize, residual: f64 },

    #[error("Krylov solve did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    KrylovNotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value in evolved field at t = {t}")]
    NonFinite { t: f64 },

    #[error("need at least {needed} levels or states, got {found}")]
    TooFewLevels { needed: usize, found: usize },

    #[error("config error at key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
