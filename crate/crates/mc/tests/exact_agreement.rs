use msc_core::models::{
    build_bilinear_dual_models, build_bilinear_models, build_combined_model, build_qp_model, DisorderRates, DisorderSpec,
    SpinModel,
};
use msc_core::{CodeLattice, Color};
use msc_mc::{run_disorder_ensemble, McConfig};
use msc_oracle::exact_partition;

const BETAS: [f64; 3] = [0.3, 0.7, 1.2];

fn compare(name: &str, model: SpinModel, seed: u64) {
    let mut cfg = McConfig::new(BETAS.to_vec(), 200_000, 20_000, seed);
    cfg.exclude_unequilibrated = false;
    cfg.bootstrap_resamples = 10;
    let builder = |_: u64| Ok(model.clone());
    let res = run_disorder_ensemble(&builder, &cfg).unwrap();
    for (k, &beta) in BETAS.iter().enumerate() {
        let exact = exact_partition(&model, beta).unwrap();
        let mc = &res.betas[k];
        let q2 = exact.q2.unwrap();
        for (what, got, err, want) in [
            ("energy", mc.energy, mc.energy_err, exact.energy),
            ("m2", mc.m2, mc.m2_err, exact.m2),
            ("q2", mc.q2, mc.q2_err, q2),
        ] {
            assert!(err > 0.0 && err.is_finite(), "{name} {what} at {beta}: error {err}");
            assert!((got - want).abs() <= 3.0 * err, "{name} {what} at beta {beta}: {got} +- {err} vs exact {want}");
        }
        for (got, want) in mc.bond_averages.iter().zip(&exact.bond_averages) {
            assert!((got - want).abs() < 0.02, "{name} bond average at {beta}: {got} vs {want}");
        }
    }
}

fn lattice() -> CodeLattice {
    CodeLattice::new(2, 2).unwrap()
}

#[test]
fn qp_model() {
    compare("qp", build_qp_model(&lattice(), &DisorderSpec::sampled(DisorderRates::qp(0.1), 4)).unwrap(), 21);
}

#[test]
fn bilinear_models() {
    let spec = DisorderSpec::sampled(DisorderRates::bilinear(0.15), 6);
    for (c, m) in build_bilinear_models(&lattice(), &spec).unwrap().into_iter().enumerate() {
        compare(&format!("bilinear-{}", Color::from_index(c)), m, 30 + c as u64);
    }
}

#[test]
fn bilinear_dual_models() {
    let spec = DisorderSpec::sampled(DisorderRates::bilinear(0.15), 6);
    let [_, m, _] = build_bilinear_dual_models(&lattice(), &spec).unwrap();
    compare("bilinear-dual", m, 40);
}

#[test]
fn combined_model() {
    let rates = DisorderRates { p: 0.1, q: 0.2, ..Default::default() };
    compare("combined", build_combined_model(&lattice(), &DisorderSpec::sampled(rates, 9)).unwrap(), 50);
}
