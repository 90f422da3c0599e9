//! Sampling of QP, bilinear and measurement faults.
//!
//! QP events are drawn i.i.d. per site and bilinears i.i.d. per edge,
//! independently of each other. Draw `i` of round `t` is a pure function of
//! `(seed, purpose, t, i)`.

use serde::{Deserialize, Serialize};

use crate::algebra::{syndrome_of, MajoranaOperator, Syndrome};
use crate::error::CoreError;
use crate::gf2::BitVec;
use crate::lattice::CodeLattice;
use crate::rng::StreamKey;

pub const TAG_QP: &str = "noise/qp";
pub const TAG_BILINEAR: &str = "noise/bilinear";
pub const TAG_MEASUREMENT: &str = "noise/measurement";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub p_qp: f64,
    pub p_b: f64,
    #[serde(default)]
    pub p_m: f64,
}

impl ErrorRates {
    pub fn new(p_qp: f64, p_b: f64, p_m: f64) -> Result<Self, CoreError> {
        let rates = Self { p_qp, p_b, p_m };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        for (name, value) in [("p_qp", self.p_qp), ("p_b", self.p_b), ("p_m", self.p_m)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CoreError::InvalidProbability { name, value, range: "[0, 1]" });
            }
        }
        Ok(())
    }
}

/// Flags for QP sites and bilinear edges in one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SparseChain", try_from = "SparseChain")]
pub struct ErrorChain {
    pub qp_sites: BitVec,
    pub bilinear_edges: BitVec,
}

impl ErrorChain {
    pub fn empty(lattice: &CodeLattice) -> Self {
        Self { qp_sites: BitVec::zeros(lattice.num_sites()), bilinear_edges: BitVec::zeros(lattice.num_edges()) }
    }

    /// Majorana operator obtained by multiplying all selected events.
    pub fn operator(&self, lattice: &CodeLattice) -> MajoranaOperator {
        let mut support = self.qp_sites.clone();
        for e in self.bilinear_edges.ones_iter() {
            for s in lattice.edge(e).sites {
                support.toggle(s);
            }
        }
        MajoranaOperator::from_support(support)
    }

    pub fn syndrome(&self, lattice: &CodeLattice) -> Syndrome {
        syndrome_of(lattice, &self.operator(lattice)).expect("chain sized for its lattice")
    }

    pub fn check(&self, lattice: &CodeLattice) -> Result<(), CoreError> {
        if self.qp_sites.len() != lattice.num_sites() {
            return Err(CoreError::LengthMismatch { expected: lattice.num_sites(), got: self.qp_sites.len() });
        }
        if self.bilinear_edges.len() != lattice.num_edges() {
            return Err(CoreError::LengthMismatch { expected: lattice.num_edges(), got: self.bilinear_edges.len() });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SparseHistory", try_from = "SparseHistory")]
pub struct ErrorHistory {
    pub chains: Vec<ErrorChain>,
    pub measurement_faults: Vec<BitVec>,
}

impl ErrorHistory {
    pub fn rounds(&self) -> usize {
        self.chains.len()
    }
}

fn sample_round(lattice: &CodeLattice, rates: &ErrorRates, seed: u64, round: u64) -> ErrorChain {
    let qp = StreamKey::new(seed, TAG_QP).child(round);
    let bl = StreamKey::new(seed, TAG_BILINEAR).child(round);
    let qp_sites = BitVec::from_indices(
        lattice.num_sites(),
        (0..lattice.num_sites()).filter(|&i| qp.bernoulli_at(i as u64, rates.p_qp)),
    );
    let bilinear_edges = BitVec::from_indices(
        lattice.num_edges(),
        (0..lattice.num_edges()).filter(|&e| bl.bernoulli_at(e as u64, rates.p_b)),
    );
    ErrorChain { qp_sites, bilinear_edges }
}

pub fn sample_chain(lattice: &CodeLattice, rates: &ErrorRates, seed: u64) -> Result<ErrorChain, CoreError> {
    rates.validate()?;
    Ok(sample_round(lattice, rates, seed, 0))
}

/// `rounds` independent chains plus i.i.d. measurement faults. Round 0 equals
/// [`sample_chain`] with the same seed.
pub fn sample_history(lattice: &CodeLattice, rates: &ErrorRates, rounds: usize, seed: u64) -> Result<ErrorHistory, CoreError> {
    rates.validate()?;
    if rounds < 1 {
        return Err(CoreError::NoRounds(rounds));
    }
    let chains = (0..rounds as u64).map(|t| sample_round(lattice, rates, seed, t)).collect();
    let measurement_faults = (0..rounds as u64)
        .map(|t| {
            let key = StreamKey::new(seed, TAG_MEASUREMENT).child(t);
            BitVec::from_indices(
                lattice.num_plaquettes(),
                (0..lattice.num_plaquettes()).filter(|&p| key.bernoulli_at(p as u64, rates.p_m)),
            )
        })
        .collect();
    Ok(ErrorHistory { chains, measurement_faults })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseChain {
    num_sites: usize,
    num_edges: usize,
    qp_sites: Vec<usize>,
    bilinear_edges: Vec<usize>,
}

impl From<ErrorChain> for SparseChain {
    fn from(c: ErrorChain) -> Self {
        SparseChain {
            num_sites: c.qp_sites.len(),
            num_edges: c.bilinear_edges.len(),
            qp_sites: c.qp_sites.ones_iter().collect(),
            bilinear_edges: c.bilinear_edges.ones_iter().collect(),
        }
    }
}

fn dense(len: usize, idx: &[usize], what: &str) -> Result<BitVec, String> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= len) {
        return Err(format!("{what} index {bad} out of range {len}"));
    }
    let mut v = BitVec::zeros(len);
    for &i in idx {
        v.set(i, true);
    }
    Ok(v)
}

impl TryFrom<SparseChain> for ErrorChain {
    type Error = String;

    fn try_from(s: SparseChain) -> Result<Self, String> {
        Ok(ErrorChain {
            qp_sites: dense(s.num_sites, &s.qp_sites, "site")?,
            bilinear_edges: dense(s.num_edges, &s.bilinear_edges, "edge")?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseHistory {
    rounds: usize,
    num_plaquettes: usize,
    chains: Vec<ErrorChain>,
    measurement_faults: Vec<Vec<usize>>,
}

impl From<ErrorHistory> for SparseHistory {
    fn from(h: ErrorHistory) -> Self {
        SparseHistory {
            rounds: h.chains.len(),
            num_plaquettes: h.measurement_faults.first().map_or(0, |m| m.len()),
            measurement_faults: h.measurement_faults.iter().map(|m| m.ones_iter().collect()).collect(),
            chains: h.chains,
        }
    }
}

impl TryFrom<SparseHistory> for ErrorHistory {
    type Error = String;

    fn try_from(s: SparseHistory) -> Result<Self, String> {
        if s.chains.len() != s.rounds || s.measurement_faults.len() != s.rounds {
            return Err(format!("history declares {} rounds but has {} chains", s.rounds, s.chains.len()));
        }
        let measurement_faults =
            s.measurement_faults.iter().map(|m| dense(s.num_plaquettes, m, "plaquette")).collect::<Result<_, _>>()?;
        Ok(ErrorHistory { chains: s.chains, measurement_faults })
    }
}
