//! Single-spin-flip Metropolis and replica exchange on a compiled model.

use msc_core::models::SpinModel;
use msc_core::rng::McRng;
use serde::{Deserialize, Serialize};

use crate::error::McError;

/// Model flattened for fast local updates: per-spin term lists in CSR form
/// and per-term weights `coupling * tau`.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    num_spins: usize,
    weights: Vec<f64>,
    term_start: Vec<usize>,
    term_spins: Vec<u32>,
    spin_start: Vec<usize>,
    spin_terms: Vec<u32>,
}

impl CompiledModel {
    pub fn new(model: &SpinModel) -> Self {
        let mut term_start = Vec::with_capacity(model.terms.len() + 1);
        let mut term_spins = Vec::new();
        let mut degree = vec![0usize; model.num_spins];
        term_start.push(0);
        for t in &model.terms {
            term_spins.extend_from_slice(&t.spins);
            term_start.push(term_spins.len());
            for &s in &t.spins {
                degree[s as usize] += 1;
            }
        }
        let mut spin_start = vec![0usize; model.num_spins + 1];
        for i in 0..model.num_spins {
            spin_start[i + 1] = spin_start[i] + degree[i];
        }
        let mut fill = spin_start.clone();
        let mut spin_terms = vec![0u32; spin_start[model.num_spins]];
        for (k, t) in model.terms.iter().enumerate() {
            for &s in &t.spins {
                spin_terms[fill[s as usize]] = k as u32;
                fill[s as usize] += 1;
            }
        }
        CompiledModel {
            num_spins: model.num_spins,
            weights: model.terms.iter().map(|t| t.coupling * t.tau as f64).collect(),
            term_start,
            term_spins,
            spin_start,
            spin_terms,
        }
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn num_terms(&self) -> usize {
        self.weights.len()
    }

    fn term(&self, k: usize) -> &[u32] {
        &self.term_spins[self.term_start[k]..self.term_start[k + 1]]
    }

    fn terms_of(&self, i: usize) -> &[u32] {
        &self.spin_terms[self.spin_start[i]..self.spin_start[i + 1]]
    }
}

/// One replica: spins, cached spin products per term and total energy.
#[derive(Clone, Debug, PartialEq)]
pub struct McState {
    spins: Vec<i8>,
    products: Vec<i8>,
    energy: f64,
}

impl McState {
    pub fn new(model: &CompiledModel, spins: Vec<i8>) -> Result<Self, McError> {
        if spins.len() != model.num_spins {
            return Err(McError::ReplicaMismatch { expected: model.num_spins, got: spins.len() });
        }
        let products: Vec<i8> = (0..model.num_terms())
            .map(|k| model.term(k).iter().fold(1i8, |acc, &s| acc * spins[s as usize]))
            .collect();
        let mut state = McState { spins, products, energy: 0.0 };
        state.energy = state.recompute_energy(model);
        Ok(state)
    }

    /// Restores a state with a previously tracked energy, so resumed runs
    /// continue bit-identically.
    pub fn from_parts(model: &CompiledModel, spins: Vec<i8>, energy: f64) -> Result<Self, McError> {
        let mut s = Self::new(model, spins)?;
        s.energy = energy;
        Ok(s)
    }

    pub fn all_up(model: &CompiledModel) -> Self {
        Self::new(model, vec![1; model.num_spins]).expect("length matches")
    }

    pub fn random(model: &CompiledModel, rng: &mut McRng) -> Self {
        let spins = (0..model.num_spins).map(|_| if rng.next_u64() >> 63 == 1 { 1 } else { -1 }).collect();
        Self::new(model, spins).expect("length matches")
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Spin product of each term, without tau.
    pub fn products(&self) -> &[i8] {
        &self.products
    }

    pub fn recompute_energy(&self, model: &CompiledModel) -> f64 {
        -model.weights.iter().zip(&self.products).map(|(w, &v)| w * v as f64).sum::<f64>()
    }

    #[inline]
    pub fn delta_energy(&self, model: &CompiledModel, i: usize) -> f64 {
        2.0 * model.terms_of(i).iter().map(|&k| model.weights[k as usize] * self.products[k as usize] as f64).sum::<f64>()
    }

    #[inline]
    pub fn flip(&mut self, model: &CompiledModel, i: usize, delta: f64) {
        self.spins[i] = -self.spins[i];
        for &k in model.terms_of(i) {
            self.products[k as usize] = -self.products[k as usize];
        }
        self.energy += delta;
    }

    /// Single Metropolis update of spin `i`. Returns whether it flipped.
    #[inline]
    pub fn metropolis_update(&mut self, model: &CompiledModel, i: usize, beta: f64, rng: &mut McRng) -> bool {
        let delta = self.delta_energy(model, i);
        let accept = delta <= 0.0 || rng.uniform() < (-beta * delta).exp();
        if accept {
            self.flip(model, i, delta);
        }
        accept
    }
}

/// `V` proposals in typewriter order. Returns the number of accepted flips.
pub fn metropolis_sweep(model: &CompiledModel, state: &mut McState, beta: f64, rng: &mut McRng) -> usize {
    (0..model.num_spins).filter(|&i| state.metropolis_update(model, i, beta, rng)).count()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SwapStats {
    pub attempts: Vec<u64>,
    pub accepts: Vec<u64>,
}

impl SwapStats {
    pub fn new(pairs: usize) -> Self {
        Self { attempts: vec![0; pairs], accepts: vec![0; pairs] }
    }

    pub fn rates(&self) -> Vec<f64> {
        self.attempts.iter().zip(&self.accepts).map(|(&n, &a)| if n == 0 { 0.0 } else { a as f64 / n as f64 }).collect()
    }

    pub fn merge(&mut self, other: &SwapStats) {
        for (a, b) in self.attempts.iter_mut().zip(&other.attempts) {
            *a += b;
        }
        for (a, b) in self.accepts.iter_mut().zip(&other.accepts) {
            *a += b;
        }
    }
}

/// Probability of exchanging the states at two temperatures.
#[inline]
pub fn swap_probability(beta_lo: f64, beta_hi: f64, e_lo: f64, e_hi: f64) -> f64 {
    ((beta_hi - beta_lo) * (e_hi - e_lo)).exp().min(1.0)
}

/// One round of replica exchange over pairs `(k, k+1)` with `k` of parity
/// `parity`. `states[k]` is the state at `betas[k]`.
pub fn parallel_tempering_step(
    states: &mut [McState],
    betas: &[f64],
    parity: usize,
    rng: &mut McRng,
    stats: &mut SwapStats,
) -> Result<(), McError> {
    if betas.len() < 2 {
        return Err(McError::LadderTooShort(betas.len()));
    }
    if states.len() != betas.len() {
        return Err(McError::InvalidConfig(format!("{} states for {} temperatures", states.len(), betas.len())));
    }
    if stats.attempts.len() != betas.len() - 1 {
        *stats = SwapStats::new(betas.len() - 1);
    }
    let mut k = parity % 2;
    while k + 1 < betas.len() {
        let p = swap_probability(betas[k], betas[k + 1], states[k].energy, states[k + 1].energy);
        stats.attempts[k] += 1;
        if p >= 1.0 || rng.uniform() < p {
            states.swap(k, k + 1);
            stats.accepts[k] += 1;
        }
        k += 2;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use msc_core::models::Term;
    use msc_core::rng::StreamKey;

    fn pair_model() -> SpinModel {
        SpinModel::generic(2, vec![Term::new(vec![0, 1], 1.0)]).unwrap()
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let m = CompiledModel::new(&SpinModel::generic(3, vec![Term::new(vec![0, 1, 2], 1.0)]).unwrap());
        let mut s = McState::all_up(&m);
        let mut rng = StreamKey::new(1, "t").stream();
        for _ in 0..50 {
            assert_eq!(metropolis_sweep(&m, &mut s, 0.0, &mut rng), 3);
        }
    }

    #[test]
    fn downhill_moves_always_accepted() {
        let m = CompiledModel::new(&pair_model());
        let mut rng = StreamKey::new(2, "t").stream();
        for _ in 0..100 {
            let mut s = McState::new(&m, vec![1, -1]).unwrap();
            assert!(s.delta_energy(&m, 0) < 0.0);
            assert!(s.metropolis_update(&m, 0, 5.0, &mut rng));
        }
    }

    #[test]
    fn incremental_energy_stays_exact() {
        let model = SpinModel::generic(
            5,
            vec![Term::new(vec![0, 1, 2], 1.0), Term::new(vec![1, 3], 0.5), Term { spins: vec![2, 3, 4], coupling: 1.25, tau: -1 }],
        )
        .unwrap();
        let m = CompiledModel::new(&model);
        let mut rng = StreamKey::new(3, "t").stream();
        let mut s = McState::random(&m, &mut rng);
        for _ in 0..200 {
            metropolis_sweep(&m, &mut s, 0.7, &mut rng);
            assert!((s.energy() - model.energy(s.spins()).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_rules() {
        assert_eq!(swap_probability(0.5, 1.0, -3.0, -3.0), 1.0);
        assert_eq!(swap_probability(1.0, 1.0, -3.0, 5.0), 1.0);
        assert!((swap_probability(0.5, 1.0, 1.0, -1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(swap_probability(0.5, 1.0, -1.0, 1.0), 1.0);
        let m = CompiledModel::new(&pair_model());
        let mut states = vec![McState::all_up(&m)];
        let mut rng = StreamKey::new(4, "t").stream();
        let mut stats = SwapStats::default();
        assert!(matches!(parallel_tempering_step(&mut states, &[1.0], 0, &mut rng, &mut stats), Err(McError::LadderTooShort(1))));
    }
}
