//! Exact check that a spin model reproduces error-class probabilities.
//!
//! Term `j` of the model stands for error location `j`; its tau is -1 iff the
//! representative chain occupies that location. Flipping spin `i` toggles
//! the locations of the terms containing `i`, so a spin configuration `s`
//! selects the chain `e + toggles(s)`. The check enumerates every `s`,
//! compares `exp(-beta H(s))` with the probability of the selected chain,
//! and compares partition-function ratios with class-probability ratios.

use msc_core::gf2::BitVec;
use msc_core::models::{build_bilinear_dual_models, build_bilinear_models, build_qp_model, nishimori_beta, DisorderRates, DisorderSpec, SpinModel};
use msc_core::{CodeLattice, Color};
use serde::{Deserialize, Serialize};

use crate::classes::{chain_probability, enumerate_class_probabilities, ErrorSpace, ErrorType};
use crate::error::OracleError;
use crate::exact::{exact_partition, MAX_SPINS};

pub const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingModel {
    Qp,
    /// Same-colour plaquette sublattice model.
    Bilinear(Color),
    /// Model on the plaquettes of the two other colours.
    BilinearDual(Color),
}

impl MappingModel {
    pub fn error_type(self) -> ErrorType {
        match self {
            MappingModel::Qp => ErrorType::Qp,
            MappingModel::Bilinear(c) | MappingModel::BilinearDual(c) => ErrorType::Bilinear(c),
        }
    }

    pub fn name(self) -> String {
        match self {
            MappingModel::Qp => "qp".into(),
            MappingModel::Bilinear(c) => format!("bilinear-{c}"),
            MappingModel::BilinearDual(c) => format!("bilinear-dual-{c}"),
        }
    }

    /// Spin model whose term taus encode the chain on `locations`.
    pub fn build(self, lattice: &CodeLattice, space: &ErrorSpace, locations: &BitVec, p: f64) -> Result<SpinModel, OracleError> {
        let taus: Vec<i8> = (0..space.len()).map(|j| if locations.get(j) { -1 } else { 1 }).collect();
        Ok(match self {
            MappingModel::Qp => build_qp_model(lattice, &DisorderSpec::explicit(DisorderRates::qp(p.min(0.999)), taus))?,
            MappingModel::Bilinear(c) | MappingModel::BilinearDual(c) => {
                let mut per_edge = vec![1i8; lattice.num_edges()];
                for (j, &e) in space.elements.iter().enumerate() {
                    per_edge[e] = taus[j];
                }
                let spec = DisorderSpec::explicit(DisorderRates::bilinear(p.min(0.999)), per_edge);
                let mut models = if matches!(self, MappingModel::Bilinear(_)) {
                    build_bilinear_models(lattice, &spec)?
                } else {
                    build_bilinear_dual_models(lattice, &spec)?
                };
                std::mem::replace(&mut models[c.index()], SpinModel::generic(0, vec![])?)
            }
        })
    }
}

/// Fault injection for testing the check itself.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingOptions {
    /// Flip the tau of this term after building each model.
    pub corrupt_term: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub model: String,
    pub p: f64,
    pub beta: f64,
    pub representative: Vec<usize>,
    pub num_spins: usize,
    pub configurations: u64,
    pub classes: usize,
    /// Whether every single-spin toggle set is a syndrome-free product of
    /// stabilizers. Diagnostic only.
    pub toggles_are_stabilizers: bool,
    pub proportionality: bool,
    pub proportionality_max_dev: f64,
    pub offending_configuration: Option<Vec<i8>>,
    pub class_ratios: bool,
    pub class_ratio_max_dev: f64,
    pub offending_class: Option<Vec<usize>>,
    pub passed: bool,
}

pub fn mapping_consistency_check(
    lattice: &CodeLattice,
    representative: &[usize],
    p: f64,
    model: MappingModel,
) -> Result<MappingReport, OracleError> {
    mapping_consistency_check_with(lattice, representative, p, model, MappingOptions::default())
}

fn corrupt(mut m: SpinModel, opts: MappingOptions) -> SpinModel {
    if let Some(k) = opts.corrupt_term {
        if let Some(t) = m.terms.get_mut(k) {
            t.tau = -t.tau;
        }
    }
    m
}

pub fn mapping_consistency_check_with(
    lattice: &CodeLattice,
    representative: &[usize],
    p: f64,
    which: MappingModel,
    opts: MappingOptions,
) -> Result<MappingReport, OracleError> {
    let beta = nishimori_beta(p)?;
    let ty = which.error_type();
    let space = ErrorSpace::new(lattice, ty);
    let e = space.locations(representative)?;
    let model = corrupt(which.build(lattice, &space, &e, p)?, opts);
    if model.num_terms() != space.len() {
        return Err(OracleError::Unsupported(format!(
            "{} has {} terms for {} error locations",
            which.name(),
            model.num_terms(),
            space.len()
        )));
    }
    let v = model.num_spins;
    if v > MAX_SPINS {
        return Err(OracleError::TooLarge { what: "mapping check", size: v, bound: MAX_SPINS });
    }
    let m = space.len();

    let toggles: Vec<BitVec> = (0..v as u32)
        .map(|i| BitVec::from_indices(m, (0..m).filter(|&j| model.terms[j].spins.contains(&i))))
        .collect();
    let stabilizers = lattice.stabilizer_basis();
    let toggles_are_stabilizers = toggles
        .iter()
        .all(|t| space.syndrome_of(t).is_zero() && stabilizers.contains(&space.support_of(t)));

    // proportionality over all configurations
    let mut spins = vec![1i8; v];
    let mut chain = e.clone();
    let mut reference = None;
    let mut max_dev: f64 = 0.0;
    let mut offending = None;
    let total = 1u64 << v;
    for step in 0..total {
        if step > 0 {
            let i = step.trailing_zeros() as usize;
            spins[i] = -spins[i];
            chain.xor_assign(&toggles[i]);
        }
        let weight = (-beta * model.energy(&spins)?).exp();
        let prob = chain_probability(p, m, chain.count_ones());
        let ratio = weight / prob;
        let r0 = *reference.get_or_insert(ratio);
        let dev = (ratio / r0 - 1.0).abs();
        if dev > max_dev {
            max_dev = dev;
            if dev > TOLERANCE && offending.is_none() {
                offending = Some(spins.clone());
            }
        }
    }

    // partition-function ratios against class-probability ratios
    let classes = enumerate_class_probabilities(lattice, representative, p, ty)?;
    let log_z = |rep: &[usize]| -> Result<f64, OracleError> {
        let loc = space.locations(rep)?;
        let m = corrupt(which.build(lattice, &space, &loc, p)?, opts);
        Ok(exact_partition(&m, beta)?.log_z)
    };
    let base = &classes.classes[0];
    let z0 = log_z(&base.representative)?;
    let mut class_dev: f64 = 0.0;
    let mut offending_class = None;
    for c in &classes.classes[1..] {
        let z = log_z(&c.representative)?;
        let dev = ((z - z0) - (c.probability.ln() - base.probability.ln())).exp_m1().abs();
        if dev > class_dev {
            class_dev = dev;
            if dev > TOLERANCE && offending_class.is_none() {
                offending_class = Some(c.representative.clone());
            }
        }
    }

    let proportionality = max_dev <= TOLERANCE;
    let class_ratios = class_dev <= TOLERANCE;
    Ok(MappingReport {
        model: which.name(),
        p,
        beta,
        representative: representative.to_vec(),
        num_spins: v,
        configurations: total,
        classes: classes.classes.len(),
        toggles_are_stabilizers,
        proportionality,
        proportionality_max_dev: max_dev,
        offending_configuration: offending,
        class_ratios,
        class_ratio_max_dev: class_dev,
        offending_class,
        passed: proportionality && class_ratios,
    })
}
