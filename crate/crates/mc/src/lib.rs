//! Metropolis and parallel-tempering sampling of disordered spin models,
//! with overlap observables, Wilson loops and disorder averaging.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod observables;
pub mod state;
pub mod wilson;

pub use config::{McConfig, Start};
pub use ensemble::{
    disorder_seed, run_disorder_ensemble, run_disorder_ensemble_with, BetaResult, EnsembleCheckpoint, EnsembleResult,
    RunControl, SampleRun,
};
pub use error::McError;
pub use observables::{measure, MeasureContext};
pub use state::{metropolis_sweep, parallel_tempering_step, CompiledModel, McState, SwapStats};
pub use wilson::{gauge_loops, wilson_loop, LoopFamily, LoopSpec};
