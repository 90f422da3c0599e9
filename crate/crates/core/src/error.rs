use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("lattice must be at least 2x2 unit cells (minimum size), got {l1}x{l2}")]
    LatticeTooSmall { l1: usize, l2: usize },
    #[error("lattice {l1}x{l2} has degenerate incidence")]
    DegenerateLattice { l1: usize, l2: usize },
    #[error("unknown plaquette colour {0:?}")]
    UnknownColor(String),
    #[error("plaquette index {index} out of range (lattice has {len})")]
    PlaquetteOutOfRange { index: usize, len: usize },
    #[error("operator length {got} does not match lattice size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability {name} = {value} outside {range}")]
    InvalidProbability { name: &'static str, value: f64, range: &'static str },
    #[error("need at least one round, got {0}")]
    NoRounds(usize),
    #[error("tau vector has length {got}, model needs {expected}")]
    DisorderMismatch { expected: usize, got: usize },
    #[error("spin vector has length {got}, model has {expected} spins")]
    SpinCountMismatch { expected: usize, got: usize },
    #[error("spin index {index} out of range for {len} spins")]
    SpinOutOfRange { index: usize, len: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
