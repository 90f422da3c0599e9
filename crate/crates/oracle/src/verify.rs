//! The exact verification suite run on small lattices.

use msc_core::algebra::{color_product, commutes, plaquette_support, stabilizer_rank, syndrome_of, MajoranaOperator};
use msc_core::models::{build_bilinear_models, build_qp_model, nishimori_beta, DisorderRates, DisorderSpec};
use msc_core::rng::StreamKey;
use msc_core::{CodeLattice, Color};
use serde::{Deserialize, Serialize};

use crate::classes::{enumerate_class_probabilities, ErrorSpace};
use crate::error::OracleError;
use crate::mapping::{mapping_consistency_check_with, MappingModel, MappingOptions, MappingReport};
use crate::nishimori::{nishimori_bond_average, term_rates};

pub const DEFAULT_RATES: [f64; 3] = [0.1, 0.3, 0.5];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub l1: usize,
    pub l2: usize,
    pub rates: Vec<f64>,
    pub models: Vec<MappingModel>,
    /// Seeds the choice of the non-trivial representative chain.
    pub seed: u64,
    pub corrupt_term: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        let mut models = vec![MappingModel::Qp];
        models.extend(Color::ALL.map(MappingModel::Bilinear));
        VerifyOptions { l1: 2, l2: 2, rates: DEFAULT_RATES.to_vec(), models, seed: 0, corrupt_term: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub l1: usize,
    pub l2: usize,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub first_failure: Option<CheckResult>,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), passed, detail: detail.into(), mapping: None }
}

/// Stabilizer-algebra invariants of one lattice.
pub fn algebra_checks(lattice: &CodeLattice) -> Result<Vec<CheckResult>, OracleError> {
    let mut out = Vec::new();
    let plaquettes = lattice.num_plaquettes();
    let supports: Vec<MajoranaOperator> =
        (0..plaquettes).map(|p| plaquette_support(lattice, p)).collect::<Result<_, _>>()?;
    let mut bad = None;
    'outer: for a in 0..plaquettes {
        for b in a + 1..plaquettes {
            if !commutes(&supports[a], &supports[b])? {
                bad = Some((a, b));
                break 'outer;
            }
        }
    }
    out.push(check(
        "stabilizers-commute",
        bad.is_none(),
        bad.map_or_else(|| format!("{} plaquettes", plaquettes), |(a, b)| format!("plaquettes {a} and {b} anticommute")),
    ));

    let mut bad_site = None;
    for s in 0..lattice.num_sites() {
        let syn = syndrome_of(lattice, &MajoranaOperator::site(lattice, s))?;
        let ok = syn.count() == 3 && Color::ALL.iter().all(|&c| syn.count_of_color(lattice, c) == 1);
        if !ok {
            bad_site = Some(s);
            break;
        }
    }
    out.push(check(
        "site-syndromes",
        bad_site.is_none(),
        bad_site.map_or_else(|| "one flip per colour".to_string(), |s| format!("site {s}")),
    ));

    let mut bad_edge = None;
    for e in 0..lattice.num_edges() {
        let syn = syndrome_of(lattice, &MajoranaOperator::bilinear(lattice, e))?;
        let c = lattice.edge_color(e);
        let mut expected = lattice.edge(e).flips.to_vec();
        expected.sort_unstable();
        let ok = syn.plaquettes() == expected && syn.count_of_color(lattice, c) == 2;
        if !ok {
            bad_edge = Some(e);
            break;
        }
    }
    out.push(check(
        "bilinear-syndromes",
        bad_edge.is_none(),
        bad_edge.map_or_else(|| "two same-colour flips".to_string(), |e| format!("edge {e}")),
    ));

    let n = lattice.num_sites();
    let all = Color::ALL.iter().all(|&c| color_product(lattice, c).weight() == n);
    out.push(check("colour-products", all, "each colour multiplies to all sites"));

    let (rank, degeneracy) = stabilizer_rank(lattice);
    out.push(check(
        "degeneracy",
        rank == plaquettes - 2 && degeneracy == 4,
        format!("rank {rank}, degeneracy {degeneracy}"),
    ));
    Ok(out)
}

fn nishimori_checks(lattice: &CodeLattice, rates: &[f64]) -> Result<Vec<CheckResult>, OracleError> {
    let mut out = Vec::new();
    for &p in rates.iter().filter(|&&p| p > 0.0 && p < 0.5) {
        let beta = nishimori_beta(p)?;
        let qp = build_qp_model(lattice, &DisorderSpec::clean(DisorderRates::qp(p)))?;
        let bl = build_bilinear_models(lattice, &DisorderSpec::clean(DisorderRates::bilinear(p)))?;
        for (name, model) in [("qp", &qp), ("bilinear-a", &bl[0])] {
            let r = match nishimori_bond_average(model, &term_rates(model)?, beta) {
                Ok(r) => r,
                Err(OracleError::TooLarge { .. }) => continue,
                Err(e) => return Err(e),
            };
            let dev = r.max_deviation();
            out.push(check(
                format!("nishimori-{name}-p{p}"),
                dev < 1e-10,
                format!("bond average {:?} vs {:?}, {} orbits", r.bond_averages, r.predicted, r.orbits),
            ));
        }
    }
    Ok(out)
}

pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport, OracleError> {
    let lattice = CodeLattice::new(opts.l1, opts.l2)?;
    let mut checks = algebra_checks(&lattice)?;

    for &p in &opts.rates {
        let class_sum = enumerate_class_probabilities(&lattice, &[], p, crate::classes::ErrorType::Qp)?;
        let total: f64 = class_sum.classes.iter().map(|c| c.probability).sum();
        checks.push(check(
            format!("class-sum-p{p}"),
            (total - class_sum.syndrome_probability).abs() <= 1e-12 * class_sum.syndrome_probability,
            format!("{} classes, syndrome probability {:e}", class_sum.classes.len(), class_sum.syndrome_probability),
        ));
    }

    let key = StreamKey::new(opts.seed, "oracle/representative");
    for (mi, &model) in opts.models.iter().enumerate() {
        let space = ErrorSpace::new(&lattice, model.error_type());
        let single = (key.u64_at(mi as u64) % space.len() as u64) as usize;
        for &p in &opts.rates {
            for rep in [vec![], vec![single]] {
                let r = mapping_consistency_check_with(
                    &lattice,
                    &rep,
                    p,
                    model,
                    MappingOptions { corrupt_term: opts.corrupt_term },
                )?;
                let detail = format!(
                    "proportionality dev {:.3e}, class ratio dev {:.3e}, toggles are stabilizers: {}",
                    r.proportionality_max_dev, r.class_ratio_max_dev, r.toggles_are_stabilizers
                );
                checks.push(CheckResult {
                    name: format!("mapping-{}-p{}-rep{:?}", model.name(), p, rep),
                    passed: r.passed,
                    detail,
                    mapping: Some(r),
                });
            }
        }
    }

    checks.extend(nishimori_checks(&lattice, &opts.rates)?);

    let first_failure = checks.iter().find(|c| !c.passed).cloned();
    Ok(VerifyReport { l1: opts.l1, l2: opts.l2, passed: first_failure.is_none(), checks, first_failure })
}
