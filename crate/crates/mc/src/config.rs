use serde::{Deserialize, Serialize};

use crate::error::McError;
use crate::wilson::LoopFamily;

fn one() -> u64 {
    1
}
fn two() -> usize {
    2
}
fn one_sample() -> usize {
    1
}
fn resamples() -> usize {
    1000
}
fn yes() -> bool {
    true
}

/// Initial spin configuration of both replica sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    #[default]
    Random,
    /// All spins up. With disorder drawn relative to the all-up ground
    /// state on the Nishimori line this is an equilibrium configuration up
    /// to a gauge transformation.
    AllUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Inverse temperatures, strictly ascending.
    pub betas: Vec<f64>,
    /// Total sweeps per disorder sample, thermalization included.
    pub sweeps: u64,
    pub thermalization: u64,
    #[serde(default = "one")]
    pub measure_interval: u64,
    #[serde(default = "two")]
    pub replicas: usize,
    #[serde(default = "one_sample")]
    pub disorder_samples: usize,
    pub seed: u64,
    /// Sweeps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_interval: u64,
    #[serde(default = "resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub loops: Vec<LoopFamily>,
    /// Drop samples that fail the equilibration test from the averages.
    #[serde(default = "yes")]
    pub exclude_unequilibrated: bool,
    #[serde(default)]
    pub start: Start,
}

impl McConfig {
    pub fn new(betas: Vec<f64>, sweeps: u64, thermalization: u64, seed: u64) -> Self {
        McConfig {
            betas,
            sweeps,
            thermalization,
            measure_interval: 1,
            replicas: 2,
            disorder_samples: 1,
            seed,
            checkpoint_interval: 0,
            bootstrap_resamples: 1000,
            loops: Vec::new(),
            exclude_unequilibrated: true,
            start: Start::Random,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidConfig(m));
        if self.betas.is_empty() {
            return bad("empty beta ladder".into());
        }
        if self.betas.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return bad("betas must be finite and non-negative".into());
        }
        if self.betas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("beta ladder must be strictly ascending".into());
        }
        if self.thermalization >= self.sweeps {
            return bad(format!("thermalization {} must be below sweeps {}", self.thermalization, self.sweeps));
        }
        if self.measure_interval == 0 {
            return bad("measure_interval must be positive".into());
        }
        if self.replicas != 2 {
            return bad(format!("overlaps need 2 replicas per beta, got {}", self.replicas));
        }
        if self.disorder_samples == 0 {
            return bad("need at least one disorder sample".into());
        }
        if self.bootstrap_resamples == 0 {
            return bad("bootstrap_resamples must be positive".into());
        }
        Ok(())
    }

    /// Number of measurements each sample takes.
    pub fn measurements(&self) -> u64 {
        (self.sweeps - self.thermalization).div_ceil(self.measure_interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = McConfig::new(vec![0.1, 0.2], 100, 10, 1);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.measurements(), 90);
        let mut c = ok.clone();
        c.betas = vec![0.2, 0.1];
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.thermalization = 100;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.replicas = 1;
        assert!(c.validate().is_err());
    }
}
