use msc_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("parallel tempering needs at least 2 temperatures, got {0}")]
    LadderTooShort(usize),
    #[error("replica length {got} does not match model size {expected}")]
    ReplicaMismatch { expected: usize, got: usize },
    #[error("loop refers to spin {index} but the model has {len}")]
    LoopIndex { index: usize, len: usize },
    #[error("empty loop")]
    EmptyLoop,
    #[error("loop family {family} needs a gauge model, got {kind}")]
    LoopFamily { family: String, kind: String },
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("checkpoint does not match this run: {0}")]
    CheckpointMismatch(String),
    #[error("run halted at sweep {0} on request")]
    Halted(u64),
    #[error("too many samples failed equilibration: {excluded} of {total}")]
    AllExcluded { excluded: usize, total: usize },
}
