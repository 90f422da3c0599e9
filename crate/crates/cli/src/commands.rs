//! Subcommand implementations. Each returns the text for stdout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use msc_core::algebra::stabilizer_rank;
use msc_core::models::{
    build_bilinear_dual_models, build_bilinear_models, build_combined_model, build_gauge_model, build_qp_model,
    DisorderRates, DisorderSpec, GaugeKind, SpinModel,
};
use msc_core::noise::{sample_chain, sample_history, ErrorRates};
use msc_core::{CodeLattice, Color};
use msc_mc::{run_disorder_ensemble_with, EnsembleCheckpoint, EnsembleResult, McError, RunControl};
use msc_oracle::{run_verification, MappingModel, VerifyOptions};
use msc_threshold::output::{binder_svg, phase_rows, phase_svg, to_csv, Axis, Provenance};
use msc_threshold::scan::GridRow;
use msc_threshold::{nishimori_scan, phase_boundary, scan_threshold};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Mode, ModelChoice, RunConfig};
use crate::error::CliError;
use crate::output::{read, write_atomic, write_json};

#[derive(Debug, Parser)]
#[command(name = "msc", version, about = "Majorana surface code thresholds from disordered spin models")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice geometry.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Error sampling.
    #[command(subcommand)]
    Noise(NoiseCmd),
    /// Spin-model construction.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Run an ensemble, Nishimori scan or phase boundary from a config file.
    Run(RunArgs),
    /// Exact checks on small lattices.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Redraw an SVG figure from a CSV file.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SizeArgs {
    #[arg(long)]
    pub l1: usize,
    #[arg(long)]
    pub l2: usize,
}

#[derive(Debug, Subcommand)]
pub enum LatticeCmd {
    Info(SizeArgs),
}

#[derive(Debug, Subcommand)]
pub enum NoiseCmd {
    Sample {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, default_value_t = 0.0)]
        p_qp: f64,
        #[arg(long, default_value_t = 0.0)]
        p_b: f64,
        #[arg(long, default_value_t = 0.0)]
        p_m: f64,
        /// More than one round also samples measurement faults.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Qp,
    Bilinear,
    BilinearDual,
    Combined,
    GaugeQp,
    GaugeBilinear,
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    Build {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value = "A")]
        color: Color,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        /// Disorder seed; omit for a clean model.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint written by an earlier ensemble run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop every sample at this sweep after checkpointing.
    #[arg(long, hide = true)]
    pub halt_at_sweep: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCmd {
    Verify {
        /// Lattice as L1xL2.
        #[arg(long, default_value = "2x2")]
        size: String,
        /// Comma-separated: qp, bilinear-A, bilinear-dual-B, ...
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flip the tau of this term before checking.
        #[arg(long, hide = true)]
        corrupt_term: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Binder cumulant against the rate.
    Rate,
    /// Binder cumulant against beta.
    Beta,
    /// Critical temperature against the rate.
    Phase,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Lattice(LatticeCmd::Info(s)) => lattice_info(s.l1, s.l2),
        Command::Noise(NoiseCmd::Sample { size, p_qp, p_b, p_m, rounds, seed }) => {
            noise_sample(size, ErrorRates::new(*p_qp, *p_b, *p_m)?, *rounds, *seed)
        }
        Command::Model(ModelCmd::Build { size, kind, color, rounds, p, q, b, m, seed }) => {
            let rates = DisorderRates { p: *p, q: *q, b: *b, m: *m };
            let model = build_model(size, *kind, *color, *rounds, rates, *seed)?;
            Ok(serde_json::to_string(&model)? + "\n")
        }
        Command::Run(args) => run(args),
        Command::Oracle(OracleCmd::Verify { size, models, rates, seed, corrupt_term }) => {
            oracle_verify(size, models, rates, *seed, *corrupt_term)
        }
        Command::Plot(args) => plot(args),
    }
}

#[derive(Serialize)]
struct LatticeInfo {
    #[serde(rename = "N")]
    sites: usize,
    #[serde(rename = "P")]
    plaquettes: usize,
    edges: usize,
    edges_per_color: BTreeMap<Color, usize>,
    plaquettes_per_color: BTreeMap<Color, usize>,
    rank: usize,
    degeneracy: u64,
}

pub fn lattice_info(l1: usize, l2: usize) -> Result<String, CliError> {
    let lattice = CodeLattice::new(l1, l2)?;
    let (rank, degeneracy) = stabilizer_rank(&lattice);
    let edges_of = |c: Color| (0..lattice.num_edges()).filter(|&e| lattice.edge_color(e) == c).count();
    let info = LatticeInfo {
        sites: lattice.num_sites(),
        plaquettes: lattice.num_plaquettes(),
        edges: lattice.num_edges(),
        edges_per_color: Color::ALL.iter().map(|&c| (c, edges_of(c))).collect(),
        plaquettes_per_color: Color::ALL.iter().map(|&c| (c, lattice.plaquettes_of_color(c).count())).collect(),
        rank,
        degeneracy,
    };
    Ok(serde_json::to_string(&info)? + "\n")
}

fn noise_sample(size: &SizeArgs, rates: ErrorRates, rounds: usize, seed: u64) -> Result<String, CliError> {
    let lattice = CodeLattice::new(size.l1, size.l2)?;
    let out = if rounds == 1 {
        let chain = sample_chain(&lattice, &rates, seed)?;
        json!({ "rates": rates, "seed": seed, "chain": chain, "syndrome": chain.syndrome(&lattice).plaquettes() })
    } else {
        let history = sample_history(&lattice, &rates, rounds, seed)?;
        let syndromes: Vec<Vec<usize>> = history.chains.iter().map(|c| c.syndrome(&lattice).plaquettes()).collect();
        json!({ "rates": rates, "seed": seed, "history": history, "syndromes": syndromes })
    };
    Ok(serde_json::to_string(&out)? + "\n")
}

fn build_model(
    size: &SizeArgs,
    kind: KindArg,
    color: Color,
    rounds: usize,
    rates: DisorderRates,
    seed: Option<u64>,
) -> Result<SpinModel, CliError> {
    let lattice = CodeLattice::new(size.l1, size.l2)?;
    let spec = match seed {
        Some(s) => DisorderSpec::sampled(rates, s),
        None => DisorderSpec::clean(rates),
    };
    let pick = |ms: [SpinModel; 3]| ms.into_iter().nth(color.index()).expect("three colours");
    Ok(match kind {
        KindArg::Qp => build_qp_model(&lattice, &spec)?,
        KindArg::Bilinear => pick(build_bilinear_models(&lattice, &spec)?),
        KindArg::BilinearDual => pick(build_bilinear_dual_models(&lattice, &spec)?),
        KindArg::Combined => build_combined_model(&lattice, &spec)?,
        KindArg::GaugeQp => build_gauge_model(GaugeKind::Qp, &lattice, rounds, &spec)?,
        KindArg::GaugeBilinear => build_gauge_model(GaugeKind::Bilinear(color), &lattice, rounds, &spec)?,
    })
}

pub fn parse_mapping_model(name: &str) -> Result<MappingModel, CliError> {
    let bad = || CliError::Usage(format!("unknown model {name:?}; expected qp, bilinear-<colour> or bilinear-dual-<colour>"));
    if name == "qp" {
        return Ok(MappingModel::Qp);
    }
    if let Some(c) = name.strip_prefix("bilinear-dual-") {
        return Ok(MappingModel::BilinearDual(c.parse().map_err(|_| bad())?));
    }
    if let Some(c) = name.strip_prefix("bilinear-") {
        return Ok(MappingModel::Bilinear(c.parse().map_err(|_| bad())?));
    }
    Err(bad())
}

fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("size {s:?} should look like 2x2"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn oracle_verify(size: &str, models: &[String], rates: &[f64], seed: u64, corrupt_term: Option<usize>) -> Result<String, CliError> {
    let (l1, l2) = parse_size(size)?;
    let mut opts = VerifyOptions { l1, l2, seed, corrupt_term, ..Default::default() };
    if !models.is_empty() {
        opts.models = models.iter().map(|m| parse_mapping_model(m)).collect::<Result<_, _>>()?;
    }
    if !rates.is_empty() {
        opts.rates = rates.to_vec();
    }
    let report = run_verification(&opts)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if report.passed {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::VerificationFailed)
    }
}

fn plot(args: &PlotArgs) -> Result<String, CliError> {
    let csv = read(&args.csv)?;
    let svg = match args.kind {
        PlotKind::Rate => binder_svg(&csv, Axis::Rate)?,
        PlotKind::Beta => binder_svg(&csv, Axis::Beta)?,
        PlotKind::Phase => phase_svg(&csv)?,
    };
    write_atomic(&args.out, svg.as_bytes())?;
    Ok(format!("{}\n", args.out.display()))
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    provenance: Provenance,
    checkpoint: EnsembleCheckpoint,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

fn run(args: &RunArgs) -> Result<String, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let out = cfg.output_dir();
    let prov = Provenance::new(cfg.hash(), cfg.seed);
    let written = match cfg.mode {
        Mode::Ensemble => match run_ensemble(&cfg, &prov, &out, args)? {
            Some(files) => files,
            None => {
                return Ok(format!("halted; checkpoint at {}\n", out.join(CHECKPOINT_FILE).display()));
            }
        },
        Mode::Scan => {
            reject_resume(args)?;
            run_scan(&cfg, &prov, &out)?
        }
        Mode::Boundary => {
            reject_resume(args)?;
            run_boundary(&cfg, &prov, &out)?
        }
    };
    Ok(written.iter().map(|p| format!("{}\n", p.display())).collect())
}

fn reject_resume(args: &RunArgs) -> Result<(), CliError> {
    if args.resume.is_some() || args.halt_at_sweep.is_some() {
        return Err(CliError::Usage("scans resume from their cache_dir, not from checkpoints".into()));
    }
    Ok(())
}

fn model_label(cfg: &RunConfig) -> String {
    let color = cfg.model.color.map(|c| format!("-{c}")).unwrap_or_default();
    let base = match cfg.model.kind {
        ModelChoice::Qp => "qp",
        ModelChoice::Bilinear => "bilinear",
        ModelChoice::BilinearDual => "bilinear-dual",
        ModelChoice::Combined => "combined",
        ModelChoice::GaugeQp => "gauge-qp",
        ModelChoice::GaugeBilinear => "gauge-bilinear",
    };
    match cfg.model.kind {
        ModelChoice::Bilinear | ModelChoice::BilinearDual | ModelChoice::GaugeBilinear => format!("{base}{color}"),
        _ => base.to_string(),
    }
}

/// The rate that labels ensemble rows.
fn primary_rate(cfg: &RunConfig) -> f64 {
    match cfg.model.kind {
        ModelChoice::Qp | ModelChoice::Combined | ModelChoice::GaugeQp => cfg.rates.p,
        ModelChoice::Bilinear | ModelChoice::BilinearDual => cfg.rates.q,
        ModelChoice::GaugeBilinear => cfg.rates.b,
    }
}

fn ensemble_rows(cfg: &RunConfig, result: &EnsembleResult) -> Vec<GridRow> {
    result
        .betas
        .iter()
        .map(|b| GridRow {
            family: model_label(cfg),
            p: primary_rate(cfg),
            beta: b.beta,
            size: cfg.model.l1.unwrap_or(0),
            binder: b.binder,
            binder_err: b.binder_err,
            energy: b.energy,
            energy_err: b.energy_err,
            n_disorder: result.included,
            excluded: result.excluded,
        })
        .collect()
}

fn run_ensemble(cfg: &RunConfig, prov: &Provenance, out: &Path, args: &RunArgs) -> Result<Option<Vec<PathBuf>>, CliError> {
    let mc = cfg.mc_config(cfg.ensemble_betas()?);
    let resume = match &args.resume {
        Some(path) => {
            let file: CheckpointFile = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Config(format!("{}: not a checkpoint: {e}", path.display())))?;
            Some(file.checkpoint)
        }
        None => None,
    };
    let ck_path = out.join(CHECKPOINT_FILE);
    let sink = |ck: &EnsembleCheckpoint| -> Result<(), McError> {
        let file = CheckpointFile { provenance: prov.clone(), checkpoint: ck.clone() };
        let text = serde_json::to_string(&file).map_err(|e| McError::CheckpointMismatch(e.to_string()))?;
        write_atomic(&ck_path, text.as_bytes()).map_err(|e| McError::CheckpointMismatch(e.to_string()))
    };
    let control = RunControl { resume, on_checkpoint: Some(&sink), halt_at_sweep: args.halt_at_sweep };
    let builder = |seed: u64| cfg.build_model(seed);
    let result = match run_disorder_ensemble_with(&builder, &mc, control) {
        Ok(r) => r,
        Err(McError::Halted(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let json_path = out.join("ensemble.json");
    let csv_path = out.join("ensemble.csv");
    let svg_path = out.join("ensemble.svg");
    write_json(&json_path, prov, cfg, json!({ "result": result }))?;
    let csv = to_csv(&ensemble_rows(cfg, &result), prov)?;
    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&svg_path, binder_svg(&csv, Axis::Beta)?.as_bytes())?;
    Ok(Some(vec![json_path, csv_path, svg_path]))
}

fn run_scan(cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.scan_spec()?;
    let scan = nishimori_scan(&spec, cfg.cache_dir.as_deref())?;
    let threshold = scan_threshold(&scan)?;
    let json_path = out.join("scan.json");
    let csv_path = out.join("scan.csv");
    let svg_path = out.join("scan.svg");
    write_json(&json_path, prov, cfg, json!({ "scan": scan, "threshold": threshold }))?;
    let csv = to_csv(&scan.rows(), prov)?;
    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&svg_path, binder_svg(&csv, Axis::Rate)?.as_bytes())?;
    Ok(vec![json_path, csv_path, svg_path])
}

fn run_boundary(cfg: &RunConfig, prov: &Provenance, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.boundary_spec()?;
    let boundary = phase_boundary(&spec, cfg.cache_dir.as_deref())?;
    let json_path = out.join("boundary.json");
    let grid_path = out.join("boundary.csv");
    let binder_path = out.join("boundary.svg");
    let phase_csv_path = out.join("phase.csv");
    let phase_svg_path = out.join("phase.svg");
    write_json(&json_path, prov, cfg, json!({ "boundary": boundary }))?;
    let grid = to_csv(&boundary.grid, prov)?;
    write_atomic(&grid_path, grid.as_bytes())?;
    write_atomic(&binder_path, binder_svg(&grid, Axis::Beta)?.as_bytes())?;
    let phase = to_csv(&phase_rows(&boundary), prov)?;
    write_atomic(&phase_csv_path, phase.as_bytes())?;
    write_atomic(&phase_svg_path, phase_svg(&phase)?.as_bytes())?;
    Ok(vec![json_path, grid_path, binder_path, phase_csv_path, phase_svg_path])
}
