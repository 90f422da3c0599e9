use std::collections::HashMap;

use msc_core::gf2::BitVec;
use msc_core::models::{build_bilinear_models, build_qp_model, nishimori_beta, DisorderRates, DisorderSpec, SpinModel, Term};
use msc_core::{CodeLattice, Color};
use msc_oracle::classes::{chain_probability, enumerate_class_probabilities, ErrorSpace, ErrorType};
use msc_oracle::mapping::{mapping_consistency_check, MappingModel};
use msc_oracle::exact_partition;
use proptest::prelude::*;

// every chain, bucketed by syndrome
fn brute_syndrome_mass(lattice: &CodeLattice, ty: ErrorType, p: f64) -> HashMap<Vec<u64>, f64> {
    let space = ErrorSpace::new(lattice, ty);
    let m = space.len();
    let mut out: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut chain = BitVec::zeros(m);
    let mut syn = BitVec::zeros(lattice.num_plaquettes());
    for step in 0..(1u64 << m) {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            chain.toggle(j);
            syn.xor_assign(&space.syndromes[j]);
        }
        *out.entry(syn.words().to_vec()).or_default() += chain_probability(p, m, chain.count_ones());
    }
    out
}

#[test]
fn syndrome_mass_matches_full_enumeration() {
    let l = CodeLattice::new(2, 2).unwrap();
    for (ty, reps) in [
        (ErrorType::Bilinear(Color::B), vec![vec![], vec![0], vec![1, 4]]),
        (ErrorType::Qp, vec![vec![], vec![7]]),
    ] {
        let p = 0.13;
        let brute = brute_syndrome_mass(&l, ty, p);
        let total: f64 = brute.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let space = ErrorSpace::new(&l, ty);
        for rep in reps {
            let r = enumerate_class_probabilities(&l, &rep, p, ty).unwrap();
            let syn = space.syndrome_of(&space.locations(&rep).unwrap());
            let expected = brute[&syn.words().to_vec()];
            assert!((r.syndrome_probability - expected).abs() < 1e-12 * expected, "{ty:?} {rep:?}");
            let by_class: f64 = r.classes.iter().map(|c| c.probability).sum();
            assert!((by_class - expected).abs() < 1e-12 * expected);
        }
    }
}

#[test]
fn dual_bilinear_mapping_holds_everywhere() {
    let l = CodeLattice::new(2, 2).unwrap();
    for c in Color::ALL {
        for p in [0.1, 0.3, 0.5] {
            for rep in [vec![], vec![2]] {
                let r = mapping_consistency_check(&l, &rep, p, MappingModel::BilinearDual(c)).unwrap();
                assert!(r.passed, "{r:?}");
            }
        }
    }
}

#[test]
fn same_colour_bilinear_model_reaches_only_part_of_each_class() {
    let l = CodeLattice::new(2, 2).unwrap();
    let r = mapping_consistency_check(&l, &[], 0.1, MappingModel::Bilinear(Color::A)).unwrap();
    assert!(r.proportionality);
    assert!(r.toggles_are_stabilizers);
    assert!(!r.class_ratios);
    let r = mapping_consistency_check(&l, &[], 0.5, MappingModel::Bilinear(Color::A)).unwrap();
    assert!(r.passed);
}

#[test]
fn ising_ring() {
    let n = 10u32;
    let terms = (0..n).map(|i| Term::new(vec![i, (i + 1) % n], 0.7)).collect();
    let m = SpinModel::generic(n as usize, terms).unwrap();
    let beta = 0.9f64;
    let k = beta * 0.7;
    let z = (2.0 * k.cosh()).powi(n as i32) + (2.0 * k.sinh()).powi(n as i32);
    let r = exact_partition(&m, beta).unwrap();
    assert!((r.log_z - z.ln()).abs() < 1e-12);
}

fn qp_with_taus(taus: Vec<i8>) -> SpinModel {
    let l = CodeLattice::new(2, 2).unwrap();
    build_qp_model(&l, &DisorderSpec::explicit(DisorderRates::qp(0.1), taus)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_is_gauge_invariant(taus in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 24), spin in 0u32..12) {
        let m = qp_with_taus(taus);
        let mut g = m.clone();
        for t in g.terms.iter_mut().filter(|t| t.spins.contains(&spin)) {
            t.tau = -t.tau;
        }
        let beta = nishimori_beta(0.1).unwrap();
        let a = exact_partition(&m, beta).unwrap();
        let b = exact_partition(&g, beta).unwrap();
        prop_assert!((a.log_z - b.log_z).abs() < 1e-12);
        for (x, y) in a.bond_averages.iter().zip(&b.bond_averages) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_log_z_derivative(taus in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 12), beta in 0.05f64..1.5) {
        let l = CodeLattice::new(2, 2).unwrap();
        let mut per_edge = vec![1i8; l.num_edges()];
        for (k, e) in l.edges_of_color(Color::C).enumerate() {
            per_edge[e] = taus[k];
        }
        let m = build_bilinear_models(&l, &DisorderSpec::explicit(DisorderRates::bilinear(0.2), per_edge)).unwrap()[2].clone();
        let h = 1e-5;
        let up = exact_partition(&m, beta + h).unwrap().log_z;
        let down = exact_partition(&m, beta - h).unwrap().log_z;
        let e = exact_partition(&m, beta).unwrap().energy;
        prop_assert!((-(up - down) / (2.0 * h) - e).abs() < 1e-6);
    }
}
