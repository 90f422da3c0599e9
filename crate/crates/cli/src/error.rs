use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] msc_core::CoreError),
    #[error(transparent)]
    Mc(#[from] msc_mc::McError),
    #[error(transparent)]
    Oracle(#[from] msc_oracle::OracleError),
    #[error(transparent)]
    Threshold(#[from] msc_threshold::ThresholdError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// A verification ran and failed; the report has already been printed.
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed => 1,
            _ => 2,
        }
    }
}
