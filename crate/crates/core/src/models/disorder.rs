use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Error rates feeding the disorder: `p` per-site QP, `q` per-edge bilinear
/// for the planar models, `b` per-edge bilinear for the bilinear gauge
/// model, `m` per-measurement fault.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderRates {
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub m: f64,
}

impl DisorderRates {
    pub fn qp(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn bilinear(q: f64) -> Self {
        Self { q, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        for (name, value) in [("p", self.p), ("q", self.q), ("b", self.b), ("m", self.m)] {
            if !(0.0..1.0).contains(&value) {
                return Err(CoreError::InvalidProbability { name, value, range: "[0, 1)" });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderSource {
    /// One tau per term in the built model's term order. The bilinear
    /// builder instead takes one tau per lattice edge.
    Explicit(Vec<i8>),
    /// Drawn from the noise samplers with this seed.
    Sampled { seed: u64 },
    Clean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub rates: DisorderRates,
    pub source: DisorderSource,
}

impl DisorderSpec {
    pub fn sampled(rates: DisorderRates, seed: u64) -> Self {
        Self { rates, source: DisorderSource::Sampled { seed } }
    }

    pub fn explicit(rates: DisorderRates, taus: Vec<i8>) -> Self {
        Self { rates, source: DisorderSource::Explicit(taus) }
    }

    /// All tau = +1; the rates still set the couplings.
    pub fn clean(rates: DisorderRates) -> Self {
        Self { rates, source: DisorderSource::Clean }
    }
}

/// `beta J = ln((1 - p) / p) / 2`.
pub fn nishimori_beta(p: f64) -> Result<f64, CoreError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CoreError::InvalidProbability { name: "p", value: p, range: "(0, 1)" });
    }
    Ok(0.5 * ((1.0 - p) / p).ln())
}
