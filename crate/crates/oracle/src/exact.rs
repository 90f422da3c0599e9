//! Exact thermodynamics by enumerating every spin configuration.
//!
//! Configurations are visited in Gray-code order. Bit `i` set means
//! `s_i = -1`. Energies are rebuilt each step from integer per-coupling
//! sums, so no rounding drift accumulates along the walk.

use msc_core::models::{SpinModel, Term};
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::sum::Compensated;

/// Largest model `exact_partition` enumerates.
pub const MAX_SPINS: usize = 28;
/// Largest model for which overlap moments are computed (they need the full
/// distribution in memory).
pub const MAX_OVERLAP_SPINS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub beta: f64,
    pub num_spins: usize,
    pub log_z: f64,
    pub energy: f64,
    pub energy_sq: f64,
    pub m2: f64,
    pub m4: f64,
    pub q2: Option<f64>,
    pub q4: Option<f64>,
    /// Sublattice overlap moments averaged over sublattices.
    pub qs2: Option<f64>,
    pub qs4: Option<f64>,
    pub binder: Option<f64>,
    pub binder_total: Option<f64>,
    pub bond_arity: Vec<usize>,
    pub bond_averages: Vec<f64>,
    /// Sum of all configuration probabilities, as enumerated.
    pub total_probability: f64,
}

impl ExactResult {
    /// Boltzmann probability of one configuration.
    pub fn probability(&self, model: &SpinModel, spins: &[i8]) -> Result<f64, OracleError> {
        Ok((-self.beta * model.energy(spins)? - self.log_z).exp())
    }
}

/// Walks all `2^V` configurations of a model in Gray-code order.
pub(crate) struct GrayWalker {
    num_spins: usize,
    spin_terms: Vec<Vec<usize>>,
    term_group: Vec<usize>,
    term_class: Vec<usize>,
    group_couplings: Vec<f64>,
    /// `tau * prod(s)` per term.
    values: Vec<i8>,
    group_sums: Vec<i64>,
    class_sums: Vec<i64>,
    config: u64,
    step: u64,
}

impl GrayWalker {
    pub(crate) fn new(model: &SpinModel) -> Self {
        let mut spin_terms = vec![Vec::new(); model.num_spins];
        for (k, t) in model.terms.iter().enumerate() {
            for &s in &t.spins {
                spin_terms[s as usize].push(k);
            }
        }
        let mut group_couplings: Vec<f64> = Vec::new();
        let term_group = model
            .terms
            .iter()
            .map(|t: &Term| {
                group_couplings.iter().position(|c| c.to_bits() == t.coupling.to_bits()).unwrap_or_else(|| {
                    group_couplings.push(t.coupling);
                    group_couplings.len() - 1
                })
            })
            .collect::<Vec<_>>();
        let (term_class, arities) = model.term_classes();
        let values: Vec<i8> = model.terms.iter().map(|t| t.tau).collect();
        let mut group_sums = vec![0i64; group_couplings.len()];
        let mut class_sums = vec![0i64; arities.len()];
        for (k, &v) in values.iter().enumerate() {
            group_sums[term_group[k]] += v as i64;
            class_sums[term_class[k]] += v as i64;
        }
        GrayWalker {
            num_spins: model.num_spins,
            spin_terms,
            term_group,
            term_class,
            group_couplings,
            values,
            group_sums,
            class_sums,
            config: 0,
            step: 0,
        }
    }

    #[inline]
    pub(crate) fn energy(&self) -> f64 {
        -self.group_couplings.iter().zip(&self.group_sums).map(|(c, &n)| c * n as f64).sum::<f64>()
    }

    #[inline]
    pub(crate) fn config(&self) -> u64 {
        self.config
    }

    pub(crate) fn class_sums(&self) -> &[i64] {
        &self.class_sums
    }

    /// Moves to the next configuration; returns the flipped spin, or `None`
    /// after the last one.
    #[inline]
    pub(crate) fn advance(&mut self) -> Option<usize> {
        self.step += 1;
        if self.step >> self.num_spins != 0 {
            return None;
        }
        let i = self.step.trailing_zeros() as usize;
        self.config ^= 1 << i;
        for &k in &self.spin_terms[i] {
            let v = self.values[k];
            self.group_sums[self.term_group[k]] -= 2 * v as i64;
            self.class_sums[self.term_class[k]] -= 2 * v as i64;
            self.values[k] = -v;
        }
        Some(i)
    }
}

fn check_size(model: &SpinModel, bound: usize, what: &'static str) -> Result<(), OracleError> {
    if model.num_spins > bound {
        return Err(OracleError::TooLarge { what, size: model.num_spins, bound });
    }
    Ok(())
}

/// Boltzmann probabilities of all configurations, indexed by bit pattern.
pub fn configuration_probabilities(model: &SpinModel, beta: f64) -> Result<Vec<f64>, OracleError> {
    check_size(model, MAX_OVERLAP_SPINS, "configuration probabilities")?;
    let e_min = min_energy(model);
    let mut w = vec![0.0; 1usize << model.num_spins];
    let mut walk = GrayWalker::new(model);
    let mut z = Compensated::default();
    loop {
        let x = (-beta * (walk.energy() - e_min)).exp();
        w[walk.config() as usize] = x;
        z.add(x);
        if walk.advance().is_none() {
            break;
        }
    }
    let z = z.value();
    for x in &mut w {
        *x /= z;
    }
    Ok(w)
}

pub(crate) fn min_energy(model: &SpinModel) -> f64 {
    let mut walk = GrayWalker::new(model);
    let mut e_min = walk.energy();
    while walk.advance().is_some() {
        e_min = e_min.min(walk.energy());
    }
    e_min
}

/// Exact partition function and thermal averages at inverse temperature
/// `beta`, in log space with compensated sums.
pub fn exact_partition(model: &SpinModel, beta: f64) -> Result<ExactResult, OracleError> {
    check_size(model, MAX_SPINS, "exact partition function")?;
    let v = model.num_spins;
    let e_min = min_energy(model);
    let keep = v <= MAX_OVERLAP_SPINS;
    let mut probs = if keep { vec![0.0; 1usize << v] } else { Vec::new() };
    let (term_class, arities) = model.term_classes();
    let mut class_size = vec![0usize; arities.len()];
    for &c in &term_class {
        class_size[c] += 1;
    }

    let mut z = Compensated::default();
    let mut e1 = Compensated::default();
    let mut e2 = Compensated::default();
    let mut m2 = Compensated::default();
    let mut m4 = Compensated::default();
    let mut bonds = vec![Compensated::default(); arities.len()];
    let mut walk = GrayWalker::new(model);
    loop {
        let e = walk.energy();
        let w = (-beta * (e - e_min)).exp();
        z.add(w);
        e1.add(w * e);
        e2.add(w * e * e);
        let m = (v as f64 - 2.0 * walk.config().count_ones() as f64) / v as f64;
        m2.add(w * m * m);
        m4.add(w * m.powi(4));
        for (b, &s) in bonds.iter_mut().zip(walk.class_sums()) {
            b.add(w * s as f64);
        }
        if keep {
            probs[walk.config() as usize] = w;
        }
        if walk.advance().is_none() {
            break;
        }
    }
    let zv = z.value();
    let log_z = zv.ln() - beta * e_min;
    let mut total = Compensated::default();
    for p in &mut probs {
        *p /= zv;
        total.add(*p);
    }
    let (q2, q4, qs2, qs4) = if keep {
        let o = overlap_moments(&mut probs, &model.sublattices());
        (Some(o.0), Some(o.1), Some(o.2), Some(o.3))
    } else {
        (None, None, None, None)
    };
    let binder = |m2: Option<f64>, m4: Option<f64>| match (m2, m4) {
        (Some(a), Some(b)) if a > 0.0 => Some(1.0 - b / (3.0 * a * a)),
        _ => None,
    };
    Ok(ExactResult {
        beta,
        num_spins: v,
        log_z,
        energy: e1.value() / zv,
        energy_sq: e2.value() / zv,
        m2: m2.value() / zv,
        m4: m4.value() / zv,
        q2,
        q4,
        qs2,
        qs4,
        binder: binder(qs2, qs4),
        binder_total: binder(q2, q4),
        bond_averages: bonds.iter().zip(&class_size).map(|(b, &n)| b.value() / zv / n as f64).collect(),
        bond_arity: arities,
        total_probability: if keep { total.value() } else { 1.0 },
    })
}

/// In-place Walsh-Hadamard transform (unnormalized).
fn walsh_hadamard(a: &mut [f64]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, w) = (*x, *y);
                *x = u + w;
                *y = u - w;
            }
        }
        h *= 2;
    }
}

/// Overlap moments of two independent replicas. The overlap depends only
/// on `z = c1 xor c2`, whose distribution is the autocorrelation of the
/// configuration distribution. Consumes `probs`.
fn overlap_moments(probs: &mut [f64], groups: &[u8]) -> (f64, f64, f64, f64) {
    let n = probs.len();
    let v = groups.len();
    walsh_hadamard(probs);
    for x in probs.iter_mut() {
        *x *= *x;
    }
    walsh_hadamard(probs);
    let ng = groups.iter().map(|&g| g as usize + 1).max().unwrap_or(1);
    let mut masks = vec![0u64; ng];
    for (i, &g) in groups.iter().enumerate() {
        masks[g as usize] |= 1 << i;
    }
    let sizes: Vec<f64> = masks.iter().map(|m| m.count_ones().max(1) as f64).collect();
    let (mut q2, mut q4, mut s2, mut s4) =
        (Compensated::default(), Compensated::default(), Compensated::default(), Compensated::default());
    for (z, &a) in probs.iter().enumerate() {
        let a = a / n as f64;
        let q = 1.0 - 2.0 * (z as u64).count_ones() as f64 / v as f64;
        q2.add(a * q * q);
        q4.add(a * q.powi(4));
        let (mut g2, mut g4) = (0.0, 0.0);
        for (m, s) in masks.iter().zip(&sizes) {
            let qg = 1.0 - 2.0 * ((z as u64) & m).count_ones() as f64 / s;
            g2 += qg * qg;
            g4 += qg.powi(4);
        }
        s2.add(a * g2 / ng as f64);
        s4.add(a * g4 / ng as f64);
    }
    (q2.value(), q4.value(), s2.value(), s4.value())
}

/// Splits a model into independent connected components of its term
/// hypergraph. Each component lists its spins (ascending, in original
/// numbering) and a renumbered sub-model.
pub fn connected_components(model: &SpinModel) -> Vec<(Vec<usize>, SpinModel)> {
    let n = model.num_spins;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in &model.terms {
        if let Some((&first, rest)) = t.spins.split_first() {
            for &s in rest {
                let (a, b) = (find(&mut parent, first as usize), find(&mut parent, s as usize));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut order: Vec<usize> = roots.clone();
    order.sort_unstable();
    order.dedup();
    order
        .iter()
        .map(|&r| {
            let spins: Vec<usize> = (0..n).filter(|&i| roots[i] == r).collect();
            let mut index = vec![u32::MAX; n];
            for (k, &s) in spins.iter().enumerate() {
                index[s] = k as u32;
            }
            let terms = model
                .terms
                .iter()
                .filter(|t| t.spins.first().is_some_and(|&s| roots[s as usize] == r))
                .map(|t| Term { spins: t.spins.iter().map(|&s| index[s as usize]).collect(), coupling: t.coupling, tau: t.tau })
                .collect();
            let mut sub = SpinModel::generic(spins.len(), terms).expect("component terms are valid");
            sub.kind = model.kind;
            sub.metadata.roles = spins.iter().map(|&s| model.metadata.roles[s]).collect();
            (spins, sub)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use msc_core::models::Term;

    fn single(arity: usize) -> SpinModel {
        SpinModel::generic(arity, vec![Term::new((0..arity as u32).collect(), 1.0)]).unwrap()
    }

    #[test]
    fn textbook_partition_functions() {
        for beta in [0.0, 0.3, 1.7] {
            let r3 = exact_partition(&single(3), beta).unwrap();
            assert!((r3.log_z - (8.0 * f64::cosh(beta)).ln()).abs() < 1e-13);
            let r2 = exact_partition(&single(2), beta).unwrap();
            assert!((r2.log_z - (4.0 * f64::cosh(beta)).ln()).abs() < 1e-13);
            assert!((r2.energy + f64::tanh(beta)).abs() < 1e-13);
            assert!((r2.total_probability - 1.0).abs() < 1e-12);
        }
        let m = SpinModel::generic(7, vec![Term::new(vec![0, 3], 0.7), Term::new(vec![1, 2, 6], 1.3)]).unwrap();
        assert!((exact_partition(&m, 0.0).unwrap().log_z - 7.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn free_spins_have_binomial_overlap() {
        // no terms: q of V free spins has <q^2> = 1/V
        let m = SpinModel::generic(12, vec![]).unwrap();
        let r = exact_partition(&m, 1.0).unwrap();
        assert!((r.q2.unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert!((r.m2 - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn overlap_of_coupled_pair() {
        // <q^2> = (sum_ij <s_i s_j>^2) / V^2 = (2 + 2 t^2) / 4, t = tanh(beta)
        let r = exact_partition(&single(2), 0.8).unwrap();
        let t = f64::tanh(0.8);
        assert!((r.q2.unwrap() - (2.0 + 2.0 * t * t) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn size_bound() {
        let m = SpinModel::generic(29, vec![]).unwrap();
        assert!(matches!(exact_partition(&m, 1.0), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn components_split() {
        let m = SpinModel::generic(5, vec![Term::new(vec![0, 3], 1.0), Term::new(vec![1, 2], 1.0), Term::new(vec![3, 4], 1.0)]).unwrap();
        let c = connected_components(&m);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].0, vec![0, 3, 4]);
        assert_eq!(c[1].0, vec![1, 2]);
        let za: f64 = c.iter().map(|(_, s)| exact_partition(s, 0.4).unwrap().log_z).sum();
        assert!((za - exact_partition(&m, 0.4).unwrap().log_z).abs() < 1e-13);
    }
}
