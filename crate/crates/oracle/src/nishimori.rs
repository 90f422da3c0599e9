//! Exact disorder average of bond energies on the Nishimori line.
//!
//! Disorder realizations are grouped into gauge orbits (sign patterns that
//! differ by flipping the terms containing a set of spins). Thermal averages
//! of `tau * prod(s)` are constant on an orbit, so one representative per
//! orbit is solved exactly and weighted by the summed probability of the
//! whole orbit. The same machinery averages any gauge-invariant observable.

use msc_core::gf2::{Basis, BitVec};
use msc_core::models::{ModelKind, SpinModel};
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::exact::{exact_partition, ExactResult};
use crate::sum::Compensated;

/// Largest number of disorder signs enumerated.
pub const MAX_DISORDER_TERMS: usize = 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NishimoriAverage {
    pub beta: f64,
    pub bond_arity: Vec<usize>,
    /// Disorder-averaged `<tau * prod(s)>` per term class.
    pub bond_averages: Vec<f64>,
    /// Class mean of `1 - 2 p_t`, the value the gauge argument predicts.
    pub predicted: Vec<f64>,
    pub orbits: u64,
    pub orbit_size: u64,
    pub total_probability: f64,
}

impl NishimoriAverage {
    pub fn max_deviation(&self) -> f64 {
        self.bond_averages.iter().zip(&self.predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Per-term sign-flip probabilities, read from the model kind and rates.
pub fn term_rates(model: &SpinModel) -> Result<Vec<f64>, OracleError> {
    let meta = &model.metadata;
    let rates = meta.rates.ok_or_else(|| OracleError::Unsupported("model carries no disorder rates".into()))?;
    let cells = match (meta.l1, meta.l2) {
        (Some(a), Some(b)) => a * b,
        _ => return Err(OracleError::Unsupported("model carries no lattice size".into())),
    };
    let rounds = meta.rounds.unwrap_or(1);
    let t = model.num_terms();
    let split = |first: usize, a: f64, b: f64| (0..t).map(|k| if k < first { a } else { b }).collect::<Vec<f64>>();
    Ok(match model.kind {
        ModelKind::Qp => vec![rates.p; t],
        ModelKind::Bilinear | ModelKind::BilinearDual => vec![rates.q; t],
        ModelKind::Combined => split(6 * cells, rates.p, rates.q),
        ModelKind::GaugeQp => split(6 * cells * rounds, rates.p, rates.m),
        ModelKind::GaugeBilinear => split(3 * cells * rounds, rates.b, rates.m),
        ModelKind::Generic => return Err(OracleError::Unsupported("generic models need explicit rates".into())),
    })
}

/// Exact disorder average of the per-realization observables `f`, over
/// i.i.d. sign flips with rate `rates[t]` on term `t`. `f` must be
/// gauge-invariant: it is evaluated once per orbit.
pub fn orbit_average<F>(model: &SpinModel, rates: &[f64], beta: f64, f: F) -> Result<OrbitAverage, OracleError>
where
    F: Fn(&ExactResult) -> Vec<f64>,
{
    let t = model.num_terms();
    if rates.len() != t {
        return Err(OracleError::Unsupported(format!("{} rates for {} terms", rates.len(), t)));
    }
    if let Some(&r) = rates.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(msc_core::CoreError::InvalidProbability { name: "rate", value: r, range: "(0, 1)" }.into());
    }
    if t > MAX_DISORDER_TERMS {
        return Err(OracleError::TooLarge { what: "disorder enumeration", size: t, bound: MAX_DISORDER_TERMS });
    }

    let toggles: Vec<BitVec> = (0..model.num_spins as u32)
        .map(|i| BitVec::from_indices(t, (0..t).filter(|&k| model.terms[k].spins.contains(&i))))
        .collect();
    let image = Basis::from_rows(t, &toggles);
    let mut extended = image.clone();
    let free: Vec<usize> = (0..t).filter(|&k| extended.insert(BitVec::from_indices(t, [k]))).collect();
    let gauge: Vec<BitVec> = image.rows().to_vec();

    // flipping term k changes the log-probability by +-step[k]
    let step: Vec<f64> = rates.iter().map(|&r| r.ln() - (1.0 - r).ln()).collect();
    let log_base: f64 = rates.iter().map(|&r| (1.0 - r).ln()).sum();
    let log_prob = |flips: &BitVec| log_base + flips.ones_iter().map(|k| step[k]).sum::<f64>();
    let delta = |flips: &BitVec, row: &BitVec| -> f64 {
        row.ones_iter().map(|k| if flips.get(k) { -step[k] } else { step[k] }).sum()
    };

    let mut sums: Vec<Compensated> = Vec::new();
    let mut total = Compensated::default();
    let mut rep = BitVec::zeros(t);
    let orbits = 1u64 << free.len();
    for r in 0..orbits {
        if r > 0 {
            rep.toggle(free[r.trailing_zeros() as usize]);
        }
        let mut weight = Compensated::default();
        let mut x = rep.clone();
        let mut lp = log_prob(&x);
        for g in 0..(1u64 << gauge.len()) {
            if g > 0 {
                let row = &gauge[g.trailing_zeros() as usize];
                lp += delta(&x, row);
                x.xor_assign(row);
            }
            weight.add(lp.exp());
        }
        let w = weight.value();
        total.add(w);

        let mut m = model.clone();
        for k in rep.ones_iter() {
            m.terms[k].tau = -m.terms[k].tau;
        }
        let values = f(&exact_partition(&m, beta)?);
        if sums.is_empty() {
            sums = vec![Compensated::default(); values.len()];
        }
        for (s, v) in sums.iter_mut().zip(&values) {
            s.add(w * v);
        }
    }
    let z = total.value();
    Ok(OrbitAverage {
        values: sums.iter().map(|s| s.value() / z).collect(),
        orbits,
        orbit_size: 1 << gauge.len(),
        total_probability: z,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitAverage {
    pub values: Vec<f64>,
    pub orbits: u64,
    pub orbit_size: u64,
    pub total_probability: f64,
}

/// Exact `[<tau * prod(s)>]` over i.i.d. sign flips with rate `rates[t]` on
/// term `t`, relative to the model's own taus.
pub fn nishimori_bond_average(model: &SpinModel, rates: &[f64], beta: f64) -> Result<NishimoriAverage, OracleError> {
    let avg = orbit_average(model, rates, beta, |e| e.bond_averages.clone())?;
    let (classes_of, arities) = model.term_classes();
    let mut predicted = vec![0.0; arities.len()];
    let mut counts = vec![0usize; arities.len()];
    for (k, &c) in classes_of.iter().enumerate() {
        predicted[c] += f64::from(model.terms[k].tau) * (1.0 - 2.0 * rates[k]);
        counts[c] += 1;
    }
    for (p, n) in predicted.iter_mut().zip(&counts) {
        *p /= *n as f64;
    }
    Ok(NishimoriAverage {
        beta,
        bond_averages: avg.values,
        bond_arity: arities,
        predicted,
        orbits: avg.orbits,
        orbit_size: avg.orbit_size,
        total_probability: avg.total_probability,
    })
}
