use std::sync::Mutex;

use msc_core::models::{
    build_bilinear_models, build_gauge_model, build_qp_model, gauge_qp_generator, nishimori_beta, DisorderRates,
    DisorderSpec, GaugeKind,
};
use msc_core::rng::StreamKey;
use msc_core::{CodeLattice, Color};
use msc_mc::state::CompiledModel;
use msc_mc::{
    gauge_loops, run_disorder_ensemble, run_disorder_ensemble_with, wilson_loop, EnsembleCheckpoint, LoopFamily, McConfig,
    McError, McState, RunControl,
};
use msc_oracle::exact_partition;
use msc_oracle::nishimori::{nishimori_bond_average, term_rates};

fn qp_builder(l: CodeLattice, p: f64) -> impl Fn(u64) -> Result<msc_core::models::SpinModel, msc_core::CoreError> + Sync {
    move |seed| build_qp_model(&l, &DisorderSpec::sampled(DisorderRates::qp(p), seed))
}

fn small_config() -> McConfig {
    let mut cfg = McConfig::new(vec![0.4, 0.8, 1.2], 2_000, 400, 77);
    cfg.disorder_samples = 6;
    cfg.bootstrap_resamples = 50;
    cfg.exclude_unequilibrated = false;
    cfg
}

#[test]
fn resume_is_bit_identical() {
    let builder = qp_builder(CodeLattice::new(3, 3).unwrap(), 0.1);
    let cfg = small_config();
    let full = run_disorder_ensemble(&builder, &cfg).unwrap();

    let last = Mutex::new(None::<String>);
    let sink = |ck: &EnsembleCheckpoint| -> Result<(), McError> {
        *last.lock().unwrap() = Some(serde_json::to_string(ck).unwrap());
        Ok(())
    };
    let halted = run_disorder_ensemble_with(
        &builder,
        &cfg,
        RunControl { resume: None, on_checkpoint: Some(&sink), halt_at_sweep: Some(cfg.sweeps / 2) },
    );
    assert!(matches!(halted, Err(McError::Halted(1000))));
    let saved: EnsembleCheckpoint = serde_json::from_str(last.lock().unwrap().as_ref().unwrap()).unwrap();
    assert_eq!(saved.in_progress.len(), cfg.disorder_samples);
    let resumed =
        run_disorder_ensemble_with(&builder, &cfg, RunControl { resume: Some(saved), ..Default::default() }).unwrap();
    assert_eq!(serde_json::to_string(&full).unwrap(), serde_json::to_string(&resumed).unwrap());

    // periodic checkpoints do not perturb the run
    let mut periodic = cfg.clone();
    periodic.checkpoint_interval = 300;
    let noop = |_: &EnsembleCheckpoint| -> Result<(), McError> { Ok(()) };
    let with_ck =
        run_disorder_ensemble_with(&builder, &periodic, RunControl { on_checkpoint: Some(&noop), ..Default::default() })
            .unwrap();
    assert_eq!(full.betas, with_ck.betas);
}

#[test]
fn resume_rejects_other_configs() {
    let builder = qp_builder(CodeLattice::new(2, 2).unwrap(), 0.1);
    let cfg = small_config();
    let mut ck = EnsembleCheckpoint::new(&cfg);
    let mut other = cfg.clone();
    other.seed += 1;
    let r = run_disorder_ensemble_with(&builder, &other, RunControl { resume: Some(ck.clone()), ..Default::default() });
    assert!(matches!(r, Err(McError::CheckpointMismatch(_))));
    ck.version = 99;
    let r = run_disorder_ensemble_with(&builder, &cfg, RunControl { resume: Some(ck), ..Default::default() });
    assert!(matches!(r, Err(McError::CheckpointVersion { .. })));
}

#[test]
fn thread_count_does_not_change_results() {
    let builder = qp_builder(CodeLattice::new(3, 3).unwrap(), 0.12);
    let cfg = small_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_disorder_ensemble(&builder, &cfg).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
}

#[test]
fn clean_single_sample_is_the_pure_run() {
    let l = CodeLattice::new(2, 2).unwrap();
    let mut cfg = small_config();
    cfg.disorder_samples = 1;
    let clean = |_: u64| build_qp_model(&l, &DisorderSpec::clean(DisorderRates::qp(0.1)));
    let zero = |seed: u64| build_qp_model(&l, &DisorderSpec::sampled(DisorderRates::qp(0.0), seed));
    assert_eq!(run_disorder_ensemble(&clean, &cfg).unwrap(), run_disorder_ensemble(&zero, &cfg).unwrap());
}

#[test]
fn nishimori_bond_identity() {
    let p = 0.1;
    let beta = nishimori_beta(p).unwrap();
    let small = CodeLattice::new(2, 2).unwrap();
    // the exact average on the small code fixes the target first
    let clean = build_qp_model(&small, &DisorderSpec::clean(DisorderRates::qp(p))).unwrap();
    let exact = nishimori_bond_average(&clean, &term_rates(&clean).unwrap(), beta).unwrap();
    assert!((exact.bond_averages[0] - (1.0 - 2.0 * p)).abs() < 1e-10);

    for l in [small, CodeLattice::new(3, 3).unwrap()] {
        let mut cfg = McConfig::new(vec![beta], 4_000, 1_000, 5);
        cfg.disorder_samples = 200;
        cfg.bootstrap_resamples = 400;
        cfg.exclude_unequilibrated = false;
        let res = run_disorder_ensemble(&qp_builder(l.clone(), p), &cfg).unwrap();
        let b = &res.betas[0];
        assert_eq!(b.bond_arity, vec![3]);
        let err = b.bond_errors[0];
        assert!((b.bond_averages[0] - exact.bond_averages[0]).abs() < 3.0 * err, "{} +- {err}", b.bond_averages[0]);
    }
}

#[test]
fn binder_rises_with_beta_on_the_pure_triangular_model() {
    let l = CodeLattice::new(3, 4).unwrap();
    let model = build_bilinear_models(&l, &DisorderSpec::clean(DisorderRates::bilinear(0.1))).unwrap()[0].clone();
    assert_eq!(model.num_spins, 12);
    let betas = vec![0.05, 0.2, 0.35, 0.6, 1.0];
    let exact: Vec<f64> = betas.iter().map(|&b| exact_partition(&model, b).unwrap().binder.unwrap()).collect();
    assert!(exact.windows(2).all(|w| w[0] < w[1]), "{exact:?}");
    assert!(exact[0] < 0.1 && exact[4] > 0.6 && exact[4] <= 2.0 / 3.0);

    let mut cfg = McConfig::new(betas.clone(), 100_000, 10_000, 9);
    cfg.exclude_unequilibrated = false;
    let res = run_disorder_ensemble(&|_| Ok(model.clone()), &cfg).unwrap();
    for (k, b) in res.betas.iter().enumerate() {
        assert!((b.binder - exact[k]).abs() < 3.0 * b.binder_err, "beta {}: {} +- {} vs {}", b.beta, b.binder, b.binder_err, exact[k]);
        assert!(b.binder <= 2.0 / 3.0 + 3.0 * b.binder_err);
        assert!(b.m4 >= b.m2 * b.m2 - 1e-12);
    }
}

#[test]
fn wilson_loops_are_gauge_invariant() {
    let l = CodeLattice::new(2, 2).unwrap();
    let rounds = 2;
    let rates = DisorderRates { p: 0.1, m: 0.1, ..Default::default() };
    let model = build_gauge_model(GaugeKind::Qp, &l, rounds, &DisorderSpec::sampled(rates, 3)).unwrap();
    let cm = CompiledModel::new(&model);
    let mut rng = StreamKey::new(4, "w").stream();
    let state = McState::random(&cm, &mut rng);
    let mut loops = gauge_loops(&model, &LoopFamily::SpatialBlock { size: 1 }).unwrap();
    loops.extend(gauge_loops(&model, &LoopFamily::Temporal { length: 2 }).unwrap());
    loops.extend(gauge_loops(&model, &LoopFamily::SpatialBlock { size: 2 }).unwrap());
    let values = |s: &[i8]| loops.iter().map(|lp| wilson_loop(s, lp).unwrap()).collect::<Vec<_>>();
    let before = values(state.spins());
    for p in 0..l.num_plaquettes() {
        for t in 0..rounds {
            let mut s = state.spins().to_vec();
            for i in gauge_qp_generator(&l, rounds, p, t) {
                s[i as usize] = -s[i as usize];
            }
            assert_eq!(values(&s), before, "generator ({p}, {t})");
        }
    }
    let lp = loops.iter().find(|lp| !lp.spins.is_empty()).unwrap();
    let mut s = state.spins().to_vec();
    let i = lp.spins[0] as usize;
    s[i] = -s[i];
    assert_eq!(wilson_loop(&s, lp).unwrap(), -wilson_loop(state.spins(), lp).unwrap());
    let up = McState::all_up(&cm);
    assert!(loops.iter().all(|lp| wilson_loop(up.spins(), lp).unwrap() == 1));

    // bilinear gauge loops exist for the same families
    let bl = build_gauge_model(GaugeKind::Bilinear(Color::A), &l, rounds, &DisorderSpec::clean(DisorderRates { b: 0.1, m: 0.1, ..Default::default() })).unwrap();
    assert!(!gauge_loops(&bl, &LoopFamily::Temporal { length: 2 }).unwrap().is_empty());
}
