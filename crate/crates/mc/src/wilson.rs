//! Gauge-invariant loop observables for the space-time models.
//!
//! A loop is stored as the product of a set of complete terms: its spins are
//! the symmetric difference of the term supports and its sign the product of
//! their taus, so `sign * prod(spins)` equals the product of the term values
//! and is invariant under every local symmetry of the model.

use msc_core::models::{ModelKind, SpinModel};
use serde::{Deserialize, Serialize};

use crate::error::McError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub family: String,
    pub spins: Vec<u32>,
    pub sign: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopFamily {
    /// Boundary of a `size x size` block of unit cells in one time slice:
    /// the product of its measurement terms.
    SpatialBlock { size: usize },
    /// Product of the site (or edge) terms of one element over `length`
    /// consecutive rounds.
    Temporal { length: usize },
}

impl LoopFamily {
    pub fn name(&self) -> String {
        match self {
            LoopFamily::SpatialBlock { size } => format!("spatial_block_{size}"),
            LoopFamily::Temporal { length } => format!("temporal_{length}"),
        }
    }
}

/// Product of the listed spins.
pub fn wilson_loop(spins: &[i8], lp: &LoopSpec) -> Result<i8, McError> {
    if lp.spins.is_empty() {
        return Err(McError::EmptyLoop);
    }
    let mut acc = 1i8;
    for &i in &lp.spins {
        let s = *spins.get(i as usize).ok_or(McError::LoopIndex { index: i as usize, len: spins.len() })?;
        acc *= s;
    }
    Ok(acc)
}

/// Loop equal to the product of the given terms.
pub fn loop_from_terms(model: &SpinModel, terms: &[usize], family: &str) -> LoopSpec {
    let mut odd = vec![false; model.num_spins];
    let mut sign = 1i8;
    for &k in terms {
        let t = &model.terms[k];
        sign *= t.tau;
        for &s in &t.spins {
            odd[s as usize] ^= true;
        }
    }
    let spins = (0..model.num_spins as u32).filter(|&i| odd[i as usize]).collect();
    LoopSpec { family: family.to_string(), spins, sign }
}

struct GaugeLayout {
    l1: usize,
    l2: usize,
    rounds: usize,
    /// Site or edge terms per round; they come first, round-major.
    elements: usize,
    /// Measurement terms per unit cell and round.
    per_cell: usize,
}

fn layout(model: &SpinModel, family: &LoopFamily) -> Result<GaugeLayout, McError> {
    let bad = || McError::LoopFamily { family: family.name(), kind: model.kind.to_string() };
    let (l1, l2, rounds) = match (model.metadata.l1, model.metadata.l2, model.metadata.rounds) {
        (Some(a), Some(b), Some(t)) => (a, b, t),
        _ => return Err(bad()),
    };
    let p = 3 * l1 * l2;
    match model.kind {
        ModelKind::GaugeQp => Ok(GaugeLayout { l1, l2, rounds, elements: 2 * p, per_cell: 3 }),
        ModelKind::GaugeBilinear => Ok(GaugeLayout { l1, l2, rounds, elements: p, per_cell: 1 }),
        _ => Err(bad()),
    }
}

/// All loops of a family, at every position and round.
pub fn gauge_loops(model: &SpinModel, family: &LoopFamily) -> Result<Vec<LoopSpec>, McError> {
    let g = layout(model, family)?;
    let name = family.name();
    let mut out = Vec::new();
    match *family {
        LoopFamily::SpatialBlock { size } => {
            if size == 0 || size > g.l1.min(g.l2) {
                return Err(McError::InvalidConfig(format!("block size {size} does not fit a {}x{} torus", g.l1, g.l2)));
            }
            let meas0 = g.elements * g.rounds;
            let per_round = g.per_cell * g.l1 * g.l2;
            for t in 0..g.rounds {
                for y0 in 0..g.l2 {
                    for x0 in 0..g.l1 {
                        let mut terms = Vec::with_capacity(size * size * g.per_cell);
                        for dy in 0..size {
                            for dx in 0..size {
                                let cell = ((y0 + dy) % g.l2) * g.l1 + (x0 + dx) % g.l1;
                                terms.extend((0..g.per_cell).map(|c| meas0 + t * per_round + g.per_cell * cell + c));
                            }
                        }
                        out.push(loop_from_terms(model, &terms, &name));
                    }
                }
            }
        }
        LoopFamily::Temporal { length } => {
            if length == 0 || length > g.rounds {
                return Err(McError::InvalidConfig(format!("temporal length {length} exceeds {} rounds", g.rounds)));
            }
            for t0 in 0..g.rounds {
                for el in 0..g.elements {
                    let terms: Vec<usize> = (0..length).map(|d| ((t0 + d) % g.rounds) * g.elements + el).collect();
                    out.push(loop_from_terms(model, &terms, &name));
                }
            }
        }
    }
    Ok(out)
}
