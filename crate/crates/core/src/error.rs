use thiserror::Error;

/// Errors raised by grid construction, operators and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
