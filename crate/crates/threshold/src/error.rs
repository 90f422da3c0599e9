use msc_core::CoreError;
use msc_mc::McError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("cache {path}: {message}")]
    Cache { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
