//! Per-measurement observables and their running accumulators.

use msc_core::models::SpinModel;
use serde::{Deserialize, Serialize};

use crate::error::McError;
use crate::state::McState;
use crate::wilson::{wilson_loop, LoopSpec};

/// Flat layout of one measurement vector.
pub mod field {
    pub const E: usize = 0;
    pub const E2: usize = 1;
    pub const ABS_M: usize = 2;
    pub const M2: usize = 3;
    pub const M4: usize = 4;
    pub const Q: usize = 5;
    pub const ABS_Q: usize = 6;
    pub const Q2: usize = 7;
    pub const Q4: usize = 8;
    /// `q_g^2` and `q_g^4` for sublattice overlaps, averaged over groups.
    pub const QS2: usize = 9;
    pub const QS4: usize = 10;
    pub const FIXED: usize = 11;
}

/// Everything `measure` needs besides the two replicas.
#[derive(Clone, Debug)]
pub struct MeasureContext {
    groups: Vec<u8>,
    group_sizes: Vec<usize>,
    term_class: Vec<usize>,
    class_sizes: Vec<usize>,
    class_arity: Vec<usize>,
    taus: Vec<i8>,
    loops: Vec<LoopSpec>,
    families: Vec<String>,
    loop_family: Vec<usize>,
    family_sizes: Vec<usize>,
}

impl MeasureContext {
    pub fn new(model: &SpinModel, loops: Vec<LoopSpec>) -> Self {
        let groups = model.sublattices();
        let n_groups = groups.iter().map(|&g| g as usize + 1).max().unwrap_or(1);
        let mut group_sizes = vec![0; n_groups];
        for &g in &groups {
            group_sizes[g as usize] += 1;
        }
        let (term_class, class_arity) = model.term_classes();
        let mut class_sizes = vec![0; class_arity.len()];
        for &c in &term_class {
            class_sizes[c] += 1;
        }
        let mut families: Vec<String> = Vec::new();
        let mut loop_family = Vec::with_capacity(loops.len());
        for lp in &loops {
            let f = families.iter().position(|f| *f == lp.family).unwrap_or_else(|| {
                families.push(lp.family.clone());
                families.len() - 1
            });
            loop_family.push(f);
        }
        let mut family_sizes = vec![0; families.len()];
        for &f in &loop_family {
            family_sizes[f] += 1;
        }
        MeasureContext {
            groups,
            group_sizes,
            term_class,
            class_sizes,
            class_arity,
            taus: model.taus(),
            loops,
            families,
            loop_family,
            family_sizes,
        }
    }

    pub fn len(&self) -> usize {
        field::FIXED + self.class_sizes.len() + self.families.len()
    }

    /// Loop family names, in output order.
    pub fn families(&self) -> &[String] {
        &self.families
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn class_arity(&self) -> &[usize] {
        &self.class_arity
    }

    pub fn loops(&self) -> &[LoopSpec] {
        &self.loops
    }

    pub fn num_groups(&self) -> usize {
        self.group_sizes.len()
    }
}

/// Observables of one pair of equal-temperature replicas, laid out as in
/// [`field`] followed by bond averages per term class and loop values.
pub fn measure(ctx: &MeasureContext, a: &McState, b: &McState) -> Result<Vec<f64>, McError> {
    let v = ctx.groups.len();
    for s in [a, b] {
        if s.spins().len() != v {
            return Err(McError::ReplicaMismatch { expected: v, got: s.spins().len() });
        }
    }
    let mut out = vec![0.0; ctx.len()];
    let n = v as f64;
    let mut sub = vec![0i64; ctx.group_sizes.len()];
    let mut q_sum = 0i64;
    let (sa, sb) = (a.spins(), b.spins());
    for i in 0..v {
        let prod = (sa[i] * sb[i]) as i64;
        q_sum += prod;
        sub[ctx.groups[i] as usize] += prod;
    }
    for s in [a, b] {
        let e = s.energy();
        let m = s.spins().iter().map(|&x| x as i64).sum::<i64>() as f64 / n;
        out[field::E] += 0.5 * e;
        out[field::E2] += 0.5 * e * e;
        out[field::ABS_M] += 0.5 * m.abs();
        out[field::M2] += 0.5 * m * m;
        out[field::M4] += 0.5 * m.powi(4);
    }
    let q = q_sum as f64 / n;
    out[field::Q] = q;
    out[field::ABS_Q] = q.abs();
    out[field::Q2] = q * q;
    out[field::Q4] = q.powi(4);
    let ng = sub.len() as f64;
    for (g, &s) in sub.iter().enumerate() {
        let qg = s as f64 / ctx.group_sizes[g].max(1) as f64;
        out[field::QS2] += qg * qg / ng;
        out[field::QS4] += qg.powi(4) / ng;
    }
    let base = field::FIXED;
    for s in [a, b] {
        for (k, &p) in s.products().iter().enumerate() {
            let c = ctx.term_class[k];
            out[base + c] += 0.5 * (ctx.taus[k] * p) as f64 / ctx.class_sizes[c] as f64;
        }
    }
    let base = field::FIXED + ctx.class_sizes.len();
    for (j, lp) in ctx.loops.iter().enumerate() {
        let wa = wilson_loop(sa, lp)? * lp.sign;
        let wb = wilson_loop(sb, lp)? * lp.sign;
        let f = ctx.loop_family[j];
        out[base + f] += 0.5 * (wa + wb) as f64 / ctx.family_sizes[f] as f64;
    }
    Ok(out)
}

/// Running sums with a fixed number of batches for thermal error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    width: usize,
    expected: u64,
    count: u64,
    sums: Vec<f64>,
    batch_sums: Vec<Vec<f64>>,
    batch_counts: Vec<u64>,
}

pub const BATCHES: usize = 32;

impl Accumulator {
    /// `expected` is the number of measurements that will be pushed.
    pub fn new(width: usize, expected: u64) -> Self {
        let nb = BATCHES.min(expected.max(1) as usize);
        Accumulator {
            width,
            expected: expected.max(1),
            count: 0,
            sums: vec![0.0; width],
            batch_sums: vec![vec![0.0; width]; nb],
            batch_counts: vec![0; nb],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.width);
        let nb = self.batch_counts.len() as u64;
        let b = ((self.count.min(self.expected - 1)) * nb / self.expected) as usize;
        for (s, v) in self.sums.iter_mut().zip(x) {
            *s += v;
        }
        for (s, v) in self.batch_sums[b].iter_mut().zip(x) {
            *s += v;
        }
        self.batch_counts[b] += 1;
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sums.iter().map(|s| s / n).collect()
    }

    /// Standard error of each mean from batch means.
    pub fn batch_errors(&self) -> Vec<f64> {
        let batches: Vec<Vec<f64>> = self
            .batch_sums
            .iter()
            .zip(&self.batch_counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s.iter().map(|x| x / c as f64).collect())
            .collect();
        let nb = batches.len();
        if nb < 2 {
            return vec![0.0; self.width];
        }
        (0..self.width)
            .map(|j| {
                let mean = batches.iter().map(|b| b[j]).sum::<f64>() / nb as f64;
                let var = batches.iter().map(|b| (b[j] - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
                (var / nb as f64).sqrt()
            })
            .collect()
    }
}

/// Two-bin logarithmic equilibration test on a scalar series: the last two
/// bins `[S/4, S/2)` and `[S/2, S)` of `S` sweeps must agree within 2 sigma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationCheck {
    total: u64,
    bins: [Accumulator; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationReport {
    pub passed: bool,
    pub early_mean: f64,
    pub late_mean: f64,
    pub sigma: f64,
}

impl EquilibrationCheck {
    pub fn new(total_sweeps: u64) -> Self {
        let q = total_sweeps / 4;
        let h = total_sweeps / 2;
        EquilibrationCheck { total: total_sweeps, bins: [Accumulator::new(1, h - q), Accumulator::new(1, total_sweeps - h)] }
    }

    pub fn record(&mut self, sweep: u64, value: f64) {
        let (q, h) = (self.total / 4, self.total / 2);
        if sweep >= h {
            self.bins[1].push(&[value]);
        } else if sweep >= q {
            self.bins[0].push(&[value]);
        }
    }

    pub fn report(&self) -> EquilibrationReport {
        let early = self.bins[0].means()[0];
        let late = self.bins[1].means()[0];
        let sigma = (self.bins[0].batch_errors()[0].powi(2) + self.bins[1].batch_errors()[0].powi(2)).sqrt();
        let tol = 2.0 * sigma + 1e-9 * early.abs().max(late.abs()).max(1.0);
        let passed = self.bins[0].count() < 2 || (early - late).abs() <= tol;
        EquilibrationReport { passed, early_mean: early, late_mean: late, sigma }
    }
}
