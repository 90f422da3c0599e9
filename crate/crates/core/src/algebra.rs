//! Stabilizer algebra on Majorana supports.
//!
//! Operators are tracked by support only; phases of Majorana monomials never
//! enter syndromes, error classes or the statistical mapping.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::gf2::BitVec;
use crate::lattice::{CodeLattice, Color};

/// Product of Majorana operators over a set of sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MajoranaOperator {
    support: BitVec,
}

impl MajoranaOperator {
    pub fn identity(num_sites: usize) -> Self {
        Self { support: BitVec::zeros(num_sites) }
    }

    pub fn from_sites(num_sites: usize, sites: impl IntoIterator<Item = usize>) -> Self {
        Self { support: BitVec::from_indices(num_sites, sites) }
    }

    pub fn from_support(support: BitVec) -> Self {
        Self { support }
    }

    /// Single Majorana `gamma_i`.
    pub fn site(lattice: &CodeLattice, i: usize) -> Self {
        Self::from_sites(lattice.num_sites(), [i])
    }

    /// Bilinear `i gamma_i gamma_j` on the two ends of edge `e`.
    pub fn bilinear(lattice: &CodeLattice, e: usize) -> Self {
        Self::from_sites(lattice.num_sites(), lattice.edge(e).sites)
    }

    pub fn support(&self) -> &BitVec {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.support.count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support.is_zero()
    }

    /// Fermion-parity grade: `true` for odd operators.
    pub fn is_odd(&self) -> bool {
        self.weight() % 2 == 1
    }

    /// Product of two operators (up to phase).
    pub fn mul(&self, other: &MajoranaOperator) -> MajoranaOperator {
        Self { support: self.support.xor(&other.support) }
    }
}

/// One flag per plaquette.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syndrome {
    violated: BitVec,
}

impl Syndrome {
    pub fn violated(&self) -> &BitVec {
        &self.violated
    }

    pub fn count(&self) -> usize {
        self.violated.count_ones()
    }

    pub fn is_trivial(&self) -> bool {
        self.violated.is_zero()
    }

    pub fn plaquettes(&self) -> Vec<usize> {
        self.violated.ones_iter().collect()
    }

    pub fn count_of_color(&self, lattice: &CodeLattice, color: Color) -> usize {
        self.violated.ones_iter().filter(|&p| lattice.plaquette_color(p) == color).count()
    }
}

pub fn plaquette_support(lattice: &CodeLattice, p: usize) -> Result<MajoranaOperator, CoreError> {
    if p >= lattice.num_plaquettes() {
        return Err(CoreError::PlaquetteOutOfRange { index: p, len: lattice.num_plaquettes() });
    }
    Ok(MajoranaOperator::from_sites(lattice.num_sites(), lattice.plaquette_sites(p).iter().copied()))
}

/// Two Majorana monomials commute iff `|a||b| - |a & b|` is even.
pub fn commutes(a: &MajoranaOperator, b: &MajoranaOperator) -> Result<bool, CoreError> {
    if a.len() != b.len() {
        return Err(CoreError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let overlap = a.support.and_count(&b.support);
    Ok((a.weight() * b.weight() + overlap) % 2 == 0)
}

pub fn syndrome_of(lattice: &CodeLattice, e: &MajoranaOperator) -> Result<Syndrome, CoreError> {
    check_len(lattice, e)?;
    let mut violated = BitVec::zeros(lattice.num_plaquettes());
    // each site flips its three plaquettes
    for s in e.support.ones_iter() {
        for &p in lattice.site_plaquettes(s) {
            violated.toggle(p);
        }
    }
    Ok(Syndrome { violated })
}

/// GF(2) rank of the plaquette-support matrix and the resulting code-space
/// dimension `2^(P - rank)`.
pub fn stabilizer_rank(lattice: &CodeLattice) -> (usize, u64) {
    let rank = lattice.stabilizer_basis().rank();
    (rank, 1u64 << (lattice.num_plaquettes() - rank))
}

/// True iff the two operators have equal syndromes and differ by a product
/// of plaquette stabilizers.
pub fn same_error_class(lattice: &CodeLattice, e1: &MajoranaOperator, e2: &MajoranaOperator) -> Result<bool, CoreError> {
    check_len(lattice, e1)?;
    check_len(lattice, e2)?;
    if syndrome_of(lattice, e1)? != syndrome_of(lattice, e2)? {
        return Ok(false);
    }
    Ok(lattice.stabilizer_basis().contains(&e1.support.xor(&e2.support)))
}

/// Product of all plaquettes of one colour.
pub fn color_product(lattice: &CodeLattice, color: Color) -> MajoranaOperator {
    let mut acc = MajoranaOperator::identity(lattice.num_sites());
    for p in lattice.plaquettes_of_color(color) {
        acc = acc.mul(&plaquette_support(lattice, p).expect("plaquette in range"));
    }
    acc
}

fn check_len(lattice: &CodeLattice, e: &MajoranaOperator) -> Result<(), CoreError> {
    if e.len() != lattice.num_sites() {
        return Err(CoreError::LengthMismatch { expected: lattice.num_sites(), got: e.len() });
    }
    Ok(())
}
