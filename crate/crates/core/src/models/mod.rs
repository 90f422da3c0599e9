//! Disordered classical spin models on hypergraphs.
//!
//! Every model is a list of terms `coupling * tau * prod(s_i)` with energy
//! `H = -sum(terms)`. The builders in [`build`] compile a code lattice and a
//! disorder specification into such a model.

mod build;
mod disorder;

pub use build::{
    build_bilinear_dual_models, build_bilinear_models, build_combined_model, build_gauge_model, build_qp_model,
    combined_couplings, gauge_qp_generator, GaugeKind,
};
pub use disorder::{nishimori_beta, DisorderRates, DisorderSource, DisorderSpec};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::lattice::Color;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Qp,
    Bilinear,
    BilinearDual,
    Combined,
    GaugeQp,
    GaugeBilinear,
    Generic,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Qp => "qp",
            ModelKind::Bilinear => "bilinear",
            ModelKind::BilinearDual => "bilinear-dual",
            ModelKind::Combined => "combined",
            ModelKind::GaugeQp => "gauge-qp",
            ModelKind::GaugeBilinear => "gauge-bilinear",
            ModelKind::Generic => "generic",
        };
        f.write_str(s)
    }
}

/// What a spin stands for geometrically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinRole {
    /// Dual vertex sitting on a plaquette.
    Dual { plaquette: usize },
    /// Space-like gauge spin on plaquette `plaquette` at round `round`.
    Spatial { plaquette: usize, round: usize },
    /// Time-like gauge spin on site or edge `element` between rounds.
    Temporal { element: usize, round: usize },
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub spins: Vec<u32>,
    pub coupling: f64,
    pub tau: i8,
}

impl Term {
    pub fn new(spins: Vec<u32>, coupling: f64) -> Self {
        Self { spins, coupling, tau: 1 }
    }

    /// `tau * prod(s)` for a configuration.
    #[inline]
    pub fn value(&self, spins: &[i8]) -> i8 {
        self.spins.iter().fold(self.tau, |acc, &i| acc * spins[i as usize])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub l1: Option<usize>,
    pub l2: Option<usize>,
    pub color: Option<Color>,
    pub rounds: Option<usize>,
    /// Inverse temperature on the Nishimori line, when defined.
    pub beta_nishimori: Option<f64>,
    pub rates: Option<DisorderRates>,
    pub roles: Vec<SpinRole>,
}

impl ModelMetadata {
    pub fn generic(num_spins: usize) -> Self {
        Self {
            l1: None,
            l2: None,
            color: None,
            rounds: None,
            beta_nishimori: None,
            rates: None,
            roles: vec![SpinRole::Free; num_spins],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct SpinModel {
    pub kind: ModelKind,
    #[serde(rename = "V")]
    pub num_spins: usize,
    pub terms: Vec<Term>,
    pub metadata: ModelMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: ModelKind,
    #[serde(rename = "V")]
    num_spins: usize,
    terms: Vec<Term>,
    metadata: ModelMetadata,
}

impl TryFrom<RawModel> for SpinModel {
    type Error = CoreError;

    fn try_from(raw: RawModel) -> Result<Self, CoreError> {
        let model = SpinModel { kind: raw.kind, num_spins: raw.num_spins, terms: raw.terms, metadata: raw.metadata };
        model.validate()?;
        Ok(model)
    }
}

impl SpinModel {
    /// Model without geometric provenance; used for toy systems.
    pub fn generic(num_spins: usize, terms: Vec<Term>) -> Result<Self, CoreError> {
        let model = SpinModel { kind: ModelKind::Generic, num_spins, terms, metadata: ModelMetadata::generic(num_spins) };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.metadata.roles.len() != self.num_spins {
            return Err(CoreError::InvalidModel(format!(
                "{} spin roles for {} spins",
                self.metadata.roles.len(),
                self.num_spins
            )));
        }
        for (k, term) in self.terms.iter().enumerate() {
            if term.tau != 1 && term.tau != -1 {
                return Err(CoreError::InvalidModel(format!("term {k} has tau {}", term.tau)));
            }
            if !term.coupling.is_finite() {
                return Err(CoreError::InvalidModel(format!("term {k} has non-finite coupling")));
            }
            for (j, &s) in term.spins.iter().enumerate() {
                if s as usize >= self.num_spins {
                    return Err(CoreError::SpinOutOfRange { index: s as usize, len: self.num_spins });
                }
                if term.spins[..j].contains(&s) {
                    return Err(CoreError::InvalidModel(format!("term {k} repeats spin {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn taus(&self) -> Vec<i8> {
        self.terms.iter().map(|t| t.tau).collect()
    }

    /// Same model with a new disorder realization.
    pub fn with_taus(&self, taus: &[i8]) -> Result<SpinModel, CoreError> {
        if taus.len() != self.terms.len() {
            return Err(CoreError::DisorderMismatch { expected: self.terms.len(), got: taus.len() });
        }
        let mut out = self.clone();
        for (t, &tau) in out.terms.iter_mut().zip(taus) {
            if tau != 1 && tau != -1 {
                return Err(CoreError::InvalidModel(format!("tau {tau} is not +-1")));
            }
            t.tau = tau;
        }
        Ok(out)
    }

    /// Term classes are keyed by arity, in increasing order. Returns the
    /// class index of each term and the arity of each class.
    pub fn term_classes(&self) -> (Vec<usize>, Vec<usize>) {
        let mut arities: Vec<usize> = self.terms.iter().map(|t| t.spins.len()).collect();
        arities.sort_unstable();
        arities.dedup();
        let class = self.terms.iter().map(|t| arities.binary_search(&t.spins.len()).unwrap()).collect();
        (class, arities)
    }

    /// Group label per spin used for sublattice observables: plaquette
    /// colour for dual models with more than one colour present, 0 for
    /// space-like and 1 for time-like gauge spins.
    pub fn sublattices(&self) -> Vec<u8> {
        let dual: Vec<u8> = self
            .metadata
            .roles
            .iter()
            .map(|r| match r {
                SpinRole::Dual { plaquette } => (plaquette % 3) as u8,
                SpinRole::Spatial { .. } | SpinRole::Free => 0,
                SpinRole::Temporal { .. } => 1,
            })
            .collect();
        match self.kind {
            ModelKind::Qp | ModelKind::Combined | ModelKind::GaugeQp | ModelKind::GaugeBilinear => dual,
            ModelKind::Bilinear | ModelKind::BilinearDual | ModelKind::Generic => vec![0; self.num_spins],
        }
    }

    fn check_state(&self, spins: &[i8]) -> Result<(), CoreError> {
        if spins.len() != self.num_spins {
            return Err(CoreError::SpinCountMismatch { expected: self.num_spins, got: spins.len() });
        }
        Ok(())
    }

    /// `-sum(coupling * tau * prod(s))`.
    pub fn energy(&self, spins: &[i8]) -> Result<f64, CoreError> {
        self.check_state(spins)?;
        Ok(-self.terms.iter().map(|t| t.coupling * t.value(spins) as f64).sum::<f64>())
    }

    /// Energy change from flipping spin `i`.
    pub fn delta_energy(&self, spins: &[i8], i: usize) -> Result<f64, CoreError> {
        self.check_state(spins)?;
        if i >= self.num_spins {
            return Err(CoreError::SpinOutOfRange { index: i, len: self.num_spins });
        }
        let i = i as u32;
        Ok(2.0
            * self
                .terms
                .iter()
                .filter(|t| t.spins.contains(&i))
                .map(|t| t.coupling * t.value(spins) as f64)
                .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_energies() {
        let m = SpinModel::generic(3, vec![Term::new(vec![0, 1, 2], 1.0)]).unwrap();
        assert_eq!(m.energy(&[1, 1, 1]).unwrap(), -1.0);
        assert_eq!(m.delta_energy(&[1, 1, 1], 1).unwrap(), 2.0);
        assert!(m.energy(&[1, 1]).is_err());
        assert!(m.delta_energy(&[1, 1, 1], 3).is_err());
    }

    #[test]
    fn validation() {
        assert!(SpinModel::generic(2, vec![Term::new(vec![0, 2], 1.0)]).is_err());
        assert!(SpinModel::generic(2, vec![Term::new(vec![1, 1], 1.0)]).is_err());
        let mut t = Term::new(vec![0, 1], 1.0);
        t.tau = 0;
        assert!(SpinModel::generic(2, vec![t]).is_err());
    }
}
