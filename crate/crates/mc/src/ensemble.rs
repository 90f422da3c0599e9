//! Disorder ensembles: one Monte Carlo run per quenched realization,
//! checkpointing, and bootstrap aggregation over realizations.

use std::sync::Mutex;

use msc_core::models::SpinModel;
use msc_core::rng::{McRng, RngState, StreamKey};
use msc_core::CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{McConfig, Start};
use crate::error::McError;
use crate::observables::{field, measure, Accumulator, EquilibrationCheck, EquilibrationReport, MeasureContext};
use crate::state::{metropolis_sweep, parallel_tempering_step, CompiledModel, McState, SwapStats};
use crate::wilson::gauge_loops;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Seed handed to the model builder for disorder sample `index`.
pub fn disorder_seed(master: u64, index: usize) -> u64 {
    StreamKey::new(master, "disorder").child(index as u64).0
}

/// Monte Carlo run of one disorder realization: two replica sets, each
/// holding one state per temperature.
pub struct SampleRun {
    index: usize,
    config: McConfig,
    model: CompiledModel,
    ctx: MeasureContext,
    taus: Vec<i8>,
    sets: Vec<Vec<McState>>,
    sweep_rngs: Vec<Vec<McRng>>,
    swap_rngs: Vec<McRng>,
    sweep: u64,
    accs: Vec<Accumulator>,
    equil: EquilibrationCheck,
    swaps: Vec<SwapStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCheckpoint {
    pub index: usize,
    pub sweep: u64,
    pub taus: Vec<i8>,
    pub spins: Vec<Vec<Vec<i8>>>,
    pub energies: Vec<Vec<f64>>,
    pub sweep_rngs: Vec<Vec<RngState>>,
    pub swap_rngs: Vec<RngState>,
    pub accumulators: Vec<Accumulator>,
    pub equilibration: EquilibrationCheck,
    pub swaps: Vec<SwapStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub index: usize,
    pub equilibration: EquilibrationReport,
    /// Thermal means per temperature, in measurement-vector layout.
    pub means: Vec<Vec<f64>>,
    pub thermal_errors: Vec<Vec<f64>>,
    pub swaps: SwapStats,
}

impl SampleRun {
    pub fn new(model: &SpinModel, config: &McConfig, index: usize) -> Result<Self, McError> {
        config.validate()?;
        let compiled = CompiledModel::new(model);
        let loops = config.loops.iter().map(|f| gauge_loops(model, f)).collect::<Result<Vec<_>, _>>()?.concat();
        let ctx = MeasureContext::new(model, loops);
        let nb = config.betas.len();
        let key = StreamKey::new(config.seed, "mc").child(index as u64);
        let init = StreamKey::new(config.seed, "mc/init").child(index as u64);
        let sets = (0..2)
            .map(|r| {
                (0..nb)
                    .map(|k| match config.start {
                        Start::Random => McState::random(&compiled, &mut init.path(&[r, k as u64]).stream()),
                        Start::AllUp => McState::all_up(&compiled),
                    })
                    .collect()
            })
            .collect();
        let sweep_rngs = (0..2).map(|r| (0..nb).map(|k| key.path(&[r, k as u64]).stream()).collect()).collect();
        let swap_rngs = (0..2).map(|r| key.path(&[r, u64::MAX]).stream()).collect();
        Ok(SampleRun {
            index,
            model: compiled,
            taus: model.taus(),
            accs: vec![Accumulator::new(ctx.len(), config.measurements()); nb],
            ctx,
            sets,
            sweep_rngs,
            swap_rngs,
            sweep: 0,
            equil: EquilibrationCheck::new(config.sweeps),
            swaps: vec![SwapStats::new(nb.saturating_sub(1)); 2],
            config: config.clone(),
        })
    }

    pub fn restore(model: &SpinModel, config: &McConfig, ck: &SampleCheckpoint) -> Result<Self, McError> {
        let mut run = Self::new(model, config, ck.index)?;
        if ck.taus != run.taus {
            return Err(McError::CheckpointMismatch(format!("disorder of sample {} differs", ck.index)));
        }
        let nb = config.betas.len();
        if ck.spins.len() != 2 || ck.spins.iter().any(|s| s.len() != nb) || ck.accumulators.len() != nb {
            return Err(McError::CheckpointMismatch("replica layout differs".into()));
        }
        for r in 0..2 {
            for k in 0..nb {
                run.sets[r][k] = McState::from_parts(&run.model, ck.spins[r][k].clone(), ck.energies[r][k])?;
                run.sweep_rngs[r][k] = McRng::from_state(ck.sweep_rngs[r][k]);
            }
            run.swap_rngs[r] = McRng::from_state(ck.swap_rngs[r]);
        }
        run.sweep = ck.sweep;
        run.accs = ck.accumulators.clone();
        run.equil = ck.equilibration.clone();
        run.swaps = ck.swaps.clone();
        Ok(run)
    }

    pub fn checkpoint(&self) -> SampleCheckpoint {
        SampleCheckpoint {
            index: self.index,
            sweep: self.sweep,
            taus: self.taus.clone(),
            spins: self.sets.iter().map(|set| set.iter().map(|s| s.spins().to_vec()).collect()).collect(),
            energies: self.sets.iter().map(|set| set.iter().map(|s| s.energy()).collect()).collect(),
            sweep_rngs: self.sweep_rngs.iter().map(|v| v.iter().map(|r| r.state()).collect()).collect(),
            swap_rngs: self.swap_rngs.iter().map(|r| r.state()).collect(),
            accumulators: self.accs.clone(),
            equilibration: self.equil.clone(),
            swaps: self.swaps.clone(),
        }
    }

    pub fn sweep(&self) -> u64 {
        self.sweep
    }

    pub fn is_done(&self) -> bool {
        self.sweep >= self.config.sweeps
    }

    pub fn context(&self) -> &MeasureContext {
        &self.ctx
    }

    /// Replica states at temperature slot `k`.
    pub fn states(&self, k: usize) -> (&McState, &McState) {
        (&self.sets[0][k], &self.sets[1][k])
    }

    /// Runs sweeps until `target` (capped at the configured total).
    pub fn advance_to(&mut self, target: u64) -> Result<(), McError> {
        let target = target.min(self.config.sweeps);
        let nb = self.config.betas.len();
        while self.sweep < target {
            for r in 0..2 {
                for k in 0..nb {
                    metropolis_sweep(&self.model, &mut self.sets[r][k], self.config.betas[k], &mut self.sweep_rngs[r][k]);
                }
                if nb >= 2 {
                    parallel_tempering_step(
                        &mut self.sets[r],
                        &self.config.betas,
                        (self.sweep % 2) as usize,
                        &mut self.swap_rngs[r],
                        &mut self.swaps[r],
                    )?;
                }
            }
            self.equil.record(self.sweep, self.sets[0][nb - 1].energy());
            let since = self.sweep.wrapping_sub(self.config.thermalization);
            if self.sweep >= self.config.thermalization && since % self.config.measure_interval == 0 {
                for k in 0..nb {
                    let x = measure(&self.ctx, &self.sets[0][k], &self.sets[1][k])?;
                    self.accs[k].push(&x);
                }
            }
            self.sweep += 1;
        }
        Ok(())
    }

    pub fn finish(&self) -> SampleResult {
        let mut swaps = self.swaps[0].clone();
        swaps.merge(&self.swaps[1]);
        SampleResult {
            index: self.index,
            equilibration: self.equil.report(),
            means: self.accs.iter().map(|a| a.means()).collect(),
            thermal_errors: self.accs.iter().map(|a| a.batch_errors()).collect(),
            swaps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCheckpoint {
    pub version: u32,
    pub config: McConfig,
    pub completed: Vec<SampleResult>,
    pub in_progress: Vec<SampleCheckpoint>,
}

impl EnsembleCheckpoint {
    pub fn new(config: &McConfig) -> Self {
        Self { version: CHECKPOINT_VERSION, config: config.clone(), completed: Vec::new(), in_progress: Vec::new() }
    }

    fn check(&self, config: &McConfig) -> Result<(), McError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(McError::CheckpointVersion { found: self.version, expected: CHECKPOINT_VERSION });
        }
        if self.config != *config {
            return Err(McError::CheckpointMismatch("configuration differs".into()));
        }
        Ok(())
    }
}

pub type CheckpointSink<'a> = &'a (dyn Fn(&EnsembleCheckpoint) -> Result<(), McError> + Sync);

/// Optional hooks for long runs.
#[derive(Default)]
pub struct RunControl<'a> {
    pub resume: Option<EnsembleCheckpoint>,
    pub on_checkpoint: Option<CheckpointSink<'a>>,
    /// Stop every sample at this sweep, checkpoint and return
    /// [`McError::Halted`].
    pub halt_at_sweep: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopAverage {
    pub family: String,
    pub mean: f64,
    pub err: f64,
}

/// Disorder-averaged observables at one temperature. Errors are bootstrap
/// errors over disorder samples, or thermal batch errors for a single sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: f64,
    pub energy: f64,
    pub energy_err: f64,
    pub energy_sq: f64,
    pub abs_m: f64,
    pub abs_m_err: f64,
    pub m2: f64,
    pub m2_err: f64,
    pub m4: f64,
    pub m4_err: f64,
    pub q: f64,
    pub q_err: f64,
    pub abs_q: f64,
    pub q2: f64,
    pub q2_err: f64,
    pub q4: f64,
    pub q4_err: f64,
    pub qs2: f64,
    pub qs4: f64,
    /// Overlap Binder cumulant `1 - [q^4] / (3 [q^2]^2)` on sublattice
    /// overlaps (moments averaged over sublattices).
    pub binder: f64,
    pub binder_err: f64,
    /// Same cumulant on the total overlap.
    pub binder_total: f64,
    pub binder_total_err: f64,
    /// `[<tau prod s>]` per term class, with the class arities.
    pub bond_arity: Vec<usize>,
    pub bond_averages: Vec<f64>,
    pub bond_errors: Vec<f64>,
    pub loops: Vec<LoopAverage>,
    /// Bootstrap replicates of `binder`.
    pub binder_replicates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: McConfig,
    pub betas: Vec<BetaResult>,
    pub samples: usize,
    pub included: usize,
    pub excluded: usize,
    /// More than 5% of samples failed equilibration.
    pub flagged: bool,
    pub swap_rates: Vec<f64>,
    pub equilibration: Vec<EquilibrationReport>,
}

pub type ModelBuilder<'a> = &'a (dyn Fn(u64) -> Result<SpinModel, CoreError> + Sync);

/// Runs every disorder sample (in parallel on the current rayon pool) and
/// aggregates. The builder receives the per-sample disorder seed.
pub fn run_disorder_ensemble(builder: ModelBuilder<'_>, config: &McConfig) -> Result<EnsembleResult, McError> {
    run_disorder_ensemble_with(builder, config, RunControl::default())
}

pub fn run_disorder_ensemble_with(builder: ModelBuilder<'_>, config: &McConfig, control: RunControl<'_>) -> Result<EnsembleResult, McError> {
    config.validate()?;
    let start = match control.resume {
        Some(ck) => {
            ck.check(config)?;
            ck
        }
        None => EnsembleCheckpoint::new(config),
    };
    let shared = Mutex::new(start.clone());
    let publish = |update: &dyn Fn(&mut EnsembleCheckpoint)| -> Result<(), McError> {
        let mut g = shared.lock().expect("checkpoint lock");
        update(&mut g);
        if let Some(sink) = control.on_checkpoint {
            sink(&g)?;
        }
        Ok(())
    };
    let interval = config.checkpoint_interval;

    let outcomes: Vec<Result<SampleResult, McError>> = (0..config.disorder_samples)
        .into_par_iter()
        .map(|i| {
            if let Some(done) = start.completed.iter().find(|r| r.index == i) {
                return Ok(done.clone());
            }
            let model = builder(disorder_seed(config.seed, i))?;
            let mut run = match start.in_progress.iter().find(|c| c.index == i) {
                Some(ck) => SampleRun::restore(&model, config, ck)?,
                None => SampleRun::new(&model, config, i)?,
            };
            while !run.is_done() {
                let mut target = config.sweeps;
                if interval > 0 {
                    target = target.min((run.sweep() / interval + 1) * interval);
                }
                if let Some(h) = control.halt_at_sweep {
                    if h > run.sweep() {
                        target = target.min(h);
                    }
                }
                run.advance_to(target)?;
                let halted = control.halt_at_sweep == Some(run.sweep()) && !run.is_done();
                if (interval > 0 || halted) && !run.is_done() {
                    let ck = run.checkpoint();
                    publish(&|g: &mut EnsembleCheckpoint| {
                        g.in_progress.retain(|c| c.index != i);
                        g.in_progress.push(ck.clone());
                        g.in_progress.sort_by_key(|c| c.index);
                    })?;
                }
                if halted {
                    return Err(McError::Halted(run.sweep()));
                }
            }
            let result = run.finish();
            if interval > 0 || control.halt_at_sweep.is_some() {
                publish(&|g: &mut EnsembleCheckpoint| {
                    g.in_progress.retain(|c| c.index != i);
                    g.completed.retain(|r| r.index != i);
                    g.completed.push(result.clone());
                    g.completed.sort_by_key(|r| r.index);
                })?;
            }
            Ok(result)
        })
        .collect();

    let mut results = Vec::with_capacity(outcomes.len());
    let mut halted = None;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(McError::Halted(s)) => halted = Some(s),
            Err(e) => return Err(e),
        }
    }
    if let Some(s) = halted {
        return Err(McError::Halted(s));
    }
    let builder_model = builder(disorder_seed(config.seed, 0))?;
    aggregate(&builder_model, config, &results)
}

fn aggregate(model: &SpinModel, config: &McConfig, results: &[SampleResult]) -> Result<EnsembleResult, McError> {
    let probe = SampleRun::new(model, config, 0)?;
    let ctx = probe.context();
    let included: Vec<&SampleResult> =
        results.iter().filter(|r| r.equilibration.passed || !config.exclude_unequilibrated).collect();
    let excluded = results.len() - included.len();
    if included.is_empty() {
        return Err(McError::AllExcluded { excluded, total: results.len() });
    }
    let n = included.len();
    let nb = config.betas.len();
    let width = ctx.len();

    let mut swaps = SwapStats::new(nb.saturating_sub(1));
    for r in &included {
        swaps.merge(&r.swaps);
    }

    let mut betas = Vec::with_capacity(nb);
    for k in 0..nb {
        let rows: Vec<&[f64]> = included.iter().map(|r| r.means[k].as_slice()).collect();
        let means = column_means(&rows, width);
        let binder = binder_of(&means, field::QS2, field::QS4);
        let binder_total = binder_of(&means, field::Q2, field::Q4);

        let mut rng = StreamKey::new(config.seed, "bootstrap").child(k as u64).stream();
        let mut rep_sum = vec![0.0; width];
        let mut rep_sq = vec![0.0; width];
        let mut binder_reps = Vec::with_capacity(config.bootstrap_resamples);
        let mut total_reps = Vec::with_capacity(config.bootstrap_resamples);
        let mut pick: Vec<&[f64]> = Vec::with_capacity(n);
        for _ in 0..config.bootstrap_resamples {
            pick.clear();
            for _ in 0..n {
                pick.push(rows[rng.below(n as u64) as usize]);
            }
            let m = column_means(&pick, width);
            for j in 0..width {
                rep_sum[j] += m[j];
                rep_sq[j] += m[j] * m[j];
            }
            binder_reps.push(binder_of(&m, field::QS2, field::QS4));
            total_reps.push(binder_of(&m, field::Q2, field::Q4));
        }
        let errs: Vec<f64> = if n >= 2 {
            let b = config.bootstrap_resamples as f64;
            (0..width).map(|j| ((rep_sq[j] / b - (rep_sum[j] / b).powi(2)).max(0.0)).sqrt()).collect()
        } else {
            included[0].thermal_errors[k].clone()
        };
        let (binder_err, binder_total_err) = if n >= 2 {
            (std_dev(&binder_reps), std_dev(&total_reps))
        } else {
            (
                binder_propagated(&means, &errs, field::QS2, field::QS4),
                binder_propagated(&means, &errs, field::Q2, field::Q4),
            )
        };
        let nc = ctx.num_classes();
        let bonds = field::FIXED..field::FIXED + nc;
        let loops = ctx
            .families()
            .iter()
            .enumerate()
            .map(|(f, name)| LoopAverage {
                family: name.clone(),
                mean: means[field::FIXED + nc + f],
                err: errs[field::FIXED + nc + f],
            })
            .collect();
        betas.push(BetaResult {
            beta: config.betas[k],
            energy: means[field::E],
            energy_err: errs[field::E],
            energy_sq: means[field::E2],
            abs_m: means[field::ABS_M],
            abs_m_err: errs[field::ABS_M],
            m2: means[field::M2],
            m2_err: errs[field::M2],
            m4: means[field::M4],
            m4_err: errs[field::M4],
            q: means[field::Q],
            q_err: errs[field::Q],
            abs_q: means[field::ABS_Q],
            q2: means[field::Q2],
            q2_err: errs[field::Q2],
            q4: means[field::Q4],
            q4_err: errs[field::Q4],
            qs2: means[field::QS2],
            qs4: means[field::QS4],
            binder,
            binder_err,
            binder_total,
            binder_total_err,
            bond_arity: ctx.class_arity().to_vec(),
            bond_averages: means[bonds.clone()].to_vec(),
            bond_errors: errs[bonds].to_vec(),
            loops,
            binder_replicates: binder_reps,
        });
    }
    Ok(EnsembleResult {
        config: config.clone(),
        betas,
        samples: results.len(),
        included: n,
        excluded,
        flagged: excluded * 20 > results.len(),
        swap_rates: swaps.rates(),
        equilibration: results.iter().map(|r| r.equilibration).collect(),
    })
}

/// Pairwise summation keeps reductions stable to ~1e-15 relative.
fn column_means(rows: &[&[f64]], width: usize) -> Vec<f64> {
    fn sum(rows: &[&[f64]], j: usize) -> f64 {
        if rows.len() <= 8 {
            rows.iter().map(|r| r[j]).sum()
        } else {
            let (a, b) = rows.split_at(rows.len() / 2);
            sum(a, j) + sum(b, j)
        }
    }
    let n = rows.len().max(1) as f64;
    (0..width).map(|j| sum(rows, j) / n).collect()
}

fn binder_of(m: &[f64], i2: usize, i4: usize) -> f64 {
    if m[i2] <= 0.0 {
        return 0.0;
    }
    1.0 - m[i4] / (3.0 * m[i2] * m[i2])
}

fn binder_propagated(m: &[f64], e: &[f64], i2: usize, i4: usize) -> f64 {
    let (q2, q4) = (m[i2], m[i4]);
    if q2 <= 0.0 {
        return 0.0;
    }
    let d4 = e[i4] / (3.0 * q2 * q2);
    let d2 = 2.0 * q4 * e[i2] / (3.0 * q2.powi(3));
    (d4 * d4 + d2 * d2).sqrt()
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
