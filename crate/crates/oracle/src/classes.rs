//! Exact error-class probabilities on small codes.

use std::collections::HashMap;

use msc_core::gf2::{null_space, BitVec};
use msc_core::{CodeLattice, Color};
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::sum::Compensated;

/// Largest kernel dimension enumerated.
pub const MAX_KERNEL_DIM: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    /// Errors on single Majorana sites.
    Qp,
    /// Bilinears on the edges of one colour.
    Bilinear(Color),
}

/// Error locations of one type: which lattice element each location is and
/// the Majorana sites it acts on.
#[derive(Clone, Debug)]
pub struct ErrorSpace {
    pub elements: Vec<usize>,
    pub supports: Vec<BitVec>,
    pub syndromes: Vec<BitVec>,
}

impl ErrorSpace {
    pub fn new(lattice: &CodeLattice, ty: ErrorType) -> Self {
        let n = lattice.num_sites();
        let elements: Vec<usize> = match ty {
            ErrorType::Qp => (0..n).collect(),
            ErrorType::Bilinear(c) => lattice.edges_of_color(c).collect(),
        };
        let supports: Vec<BitVec> = elements
            .iter()
            .map(|&x| match ty {
                ErrorType::Qp => BitVec::from_indices(n, [x]),
                ErrorType::Bilinear(_) => BitVec::from_indices(n, lattice.edge(x).sites),
            })
            .collect();
        let syndromes = supports
            .iter()
            .map(|s| {
                let mut v = BitVec::zeros(lattice.num_plaquettes());
                for site in s.ones_iter() {
                    for &p in lattice.site_plaquettes(site) {
                        v.toggle(p);
                    }
                }
                v
            })
            .collect();
        ErrorSpace { elements, supports, syndromes }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn support_of(&self, locations: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.supports[0].len());
        for j in locations.ones_iter() {
            out.xor_assign(&self.supports[j]);
        }
        out
    }

    pub fn syndrome_of(&self, locations: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.syndromes[0].len());
        for j in locations.ones_iter() {
            out.xor_assign(&self.syndromes[j]);
        }
        out
    }

    pub fn locations(&self, indices: &[usize]) -> Result<BitVec, OracleError> {
        let mut v = BitVec::zeros(self.len());
        for &i in indices {
            if i >= self.len() {
                return Err(OracleError::LocationOutOfRange { index: i, len: self.len() });
            }
            v.toggle(i);
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: usize,
    pub probability: f64,
    pub cardinality: u64,
    /// Locations of the first chain found in the class.
    pub representative: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    pub num_locations: usize,
    pub syndrome: Vec<usize>,
    /// Class of the representative is label 0.
    pub classes: Vec<ClassEntry>,
    pub syndrome_probability: f64,
    pub kernel_dim: usize,
}

/// i.i.d. probability of a chain of weight `w` out of `m` locations.
pub fn chain_probability(p: f64, m: usize, w: usize) -> f64 {
    p.powi(w as i32) * (1.0 - p).powi((m - w) as i32)
}

/// All chains with the syndrome of `representative` (given as location
/// indices), grouped into classes that differ by stabilizer products.
pub fn enumerate_class_probabilities(
    lattice: &CodeLattice,
    representative: &[usize],
    p: f64,
    ty: ErrorType,
) -> Result<ClassProbabilities, OracleError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(msc_core::CoreError::InvalidProbability { name: "p", value: p, range: "[0, 1]" }.into());
    }
    let space = ErrorSpace::new(lattice, ty);
    let m = space.len();
    let e = space.locations(representative)?;
    let kernel = null_space(&space.syndromes, lattice.num_plaquettes());
    if kernel.len() > MAX_KERNEL_DIM {
        return Err(OracleError::TooLarge { what: "error-class enumeration", size: kernel.len(), bound: MAX_KERNEL_DIM });
    }
    let stabilizers = lattice.stabilizer_basis();
    let kernel_supports: Vec<BitVec> = kernel.iter().map(|k| space.support_of(k)).collect();

    let mut labels: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut classes: Vec<(Compensated, u64, Vec<usize>)> = Vec::new();
    let mut total = Compensated::default();
    let mut chain = e.clone();
    let mut shift = BitVec::zeros(lattice.num_sites());
    let steps = 1u64 << kernel.len();
    for step in 0..steps {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            chain.xor_assign(&kernel[j]);
            shift.xor_assign(&kernel_supports[j]);
        }
        let key = stabilizers.reduce(&shift).words().to_vec();
        let next = labels.len();
        let label = *labels.entry(key).or_insert(next);
        if label == classes.len() {
            classes.push((Compensated::default(), 0, chain.ones_iter().collect()));
        }
        let pr = chain_probability(p, m, chain.count_ones());
        classes[label].0.add(pr);
        classes[label].1 += 1;
        total.add(pr);
    }
    Ok(ClassProbabilities {
        num_locations: m,
        syndrome: space.syndrome_of(&e).ones_iter().collect(),
        classes: classes
            .into_iter()
            .enumerate()
            .map(|(label, (pr, n, rep))| ClassEntry { label, probability: pr.value(), cardinality: n, representative: rep })
            .collect(),
        syndrome_probability: total.value(),
        kernel_dim: kernel.len(),
    })
}
