use msc_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{what} needs enumeration of 2^{size} states, above the bound 2^{bound}")]
    TooLarge { what: &'static str, size: usize, bound: usize },
    #[error("location index {index} out of range for {len} error locations")]
    LocationOutOfRange { index: usize, len: usize },
    #[error("{0}")]
    Unsupported(String),
}
