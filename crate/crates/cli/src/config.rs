//! TOML run configuration.

use std::path::{Path, PathBuf};

use msc_core::models::{
    build_bilinear_dual_models, build_bilinear_models, build_combined_model, build_gauge_model, build_qp_model,
    DisorderRates, DisorderSpec, GaugeKind, SpinModel,
};
use msc_core::{CodeLattice, Color, CoreError};
use msc_mc::{LoopFamily, McConfig, Start};
use msc_threshold::scan::{hash_json, Ladder};
use msc_threshold::{BoundarySpec, Family, ScanSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One disorder ensemble on one lattice.
    Ensemble,
    /// Binder crossings along the Nishimori line.
    Scan,
    /// Critical temperatures at fixed rates from a beta ladder.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Qp,
    Bilinear,
    BilinearDual,
    Combined,
    GaugeQp,
    GaugeBilinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    P,
    Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelChoice,
    #[serde(default)]
    pub color: Option<Color>,
    #[serde(default)]
    pub l1: Option<usize>,
    #[serde(default)]
    pub l2: Option<usize>,
    /// Square tori for scans and boundaries.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Rate that moves along the scan; the other stays at its `[rates]` value.
    pub variable: Variable,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSection {
    #[serde(default)]
    pub nishimori: bool,
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Tempering ladder below the Nishimori beta in scan mode.
    #[serde(default)]
    pub ladder: Option<Ladder>,
}

fn one() -> u64 {
    1
}
fn one_sample() -> usize {
    1
}
fn resamples() -> usize {
    1000
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub sweeps: u64,
    pub thermalization: u64,
    #[serde(default = "one")]
    pub measure_interval: u64,
    #[serde(default = "one_sample")]
    pub disorder_samples: usize,
    #[serde(default)]
    pub checkpoint_interval: u64,
    #[serde(default = "resamples")]
    pub bootstrap_resamples: usize,
    /// Defaults to all-up on the Nishimori line and random otherwise.
    #[serde(default)]
    pub start: Option<Start>,
    #[serde(default = "yes")]
    pub exclude_unequilibrated: bool,
    #[serde(default)]
    pub loops: Vec<LoopFamily>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Per-point result cache for scans and boundaries.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default)]
    pub rates: DisorderRates,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub temperature: TemperatureSection,
    pub mc: McSection,
}

pub const OUTPUT_DIR_ENV: &str = "MSC_OUTPUT_DIR";

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Hash of everything that affects results; output locations excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.cache_dir = None;
        hash_json(&c).expect("config serializes")
    }

    /// Environment override first, then the config, then `msc-out`.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("msc-out"))
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let t = &self.temperature;
        if t.nishimori == !t.betas.is_empty() {
            return bad("[temperature] needs exactly one of nishimori = true or a betas list");
        }
        let gauge = matches!(self.model.kind, ModelChoice::GaugeQp | ModelChoice::GaugeBilinear);
        let colored = matches!(self.model.kind, ModelChoice::Bilinear | ModelChoice::BilinearDual | ModelChoice::GaugeBilinear);
        if colored && self.model.color.is_none() {
            return bad("[model] color is required for bilinear kinds");
        }
        if gauge && self.model.rounds.is_none() {
            return bad("[model] rounds is required for gauge kinds");
        }
        if self.mode != Mode::Scan && t.ladder.is_some() {
            return bad("a tempering ladder applies to scan mode only");
        }
        match self.mode {
            Mode::Ensemble => {
                if self.model.l1.is_none() || self.model.l2.is_none() {
                    return bad("ensemble mode needs [model] l1 and l2");
                }
                if self.scan.is_some() {
                    return bad("ensemble mode takes no [scan] section");
                }
            }
            Mode::Scan | Mode::Boundary => {
                if gauge {
                    return bad("scans and boundaries support planar kinds only");
                }
                if self.model.sizes.len() < 2 {
                    return bad("[model] sizes needs at least two lattice sizes");
                }
                if self.scan.is_none() {
                    return bad("[scan] section with variable and values is required");
                }
                if self.mode == Mode::Scan && !t.nishimori {
                    return bad("scan mode runs on the Nishimori line; set nishimori = true");
                }
                if self.mode == Mode::Boundary && t.nishimori {
                    return bad("boundary mode needs a betas list");
                }
            }
        }
        Ok(())
    }

    pub fn mc_config(&self, betas: Vec<f64>) -> McConfig {
        let m = &self.mc;
        let mut cfg = McConfig::new(betas, m.sweeps, m.thermalization, self.seed);
        cfg.measure_interval = m.measure_interval;
        cfg.disorder_samples = m.disorder_samples;
        cfg.checkpoint_interval = m.checkpoint_interval;
        cfg.bootstrap_resamples = m.bootstrap_resamples;
        cfg.exclude_unequilibrated = m.exclude_unequilibrated;
        cfg.loops = m.loops.clone();
        cfg.start = m.start.unwrap_or(if self.temperature.nishimori { Start::AllUp } else { Start::Random });
        cfg
    }

    /// Scan family: the moving rate picks between the combined variants.
    pub fn family(&self) -> Result<Family, CliError> {
        let variable = self.scan.as_ref().map(|s| s.variable);
        let wrong = |v: Variable| Err(CliError::Config(format!("{:?} cannot be scanned for this model kind", v)));
        let color = self.model.color.unwrap_or(Color::A);
        match (self.model.kind, variable) {
            (ModelChoice::Qp, Some(Variable::P) | None) => Ok(Family::Qp),
            (ModelChoice::Bilinear, Some(Variable::Q) | None) => Ok(Family::Bilinear { color }),
            (ModelChoice::BilinearDual, Some(Variable::Q) | None) => Ok(Family::BilinearDual { color }),
            (ModelChoice::Combined, Some(Variable::P) | None) => Ok(Family::CombinedP { q: self.rates.q }),
            (ModelChoice::Combined, Some(Variable::Q)) => Ok(Family::CombinedQ { p: self.rates.p }),
            (_, Some(v)) => wrong(v),
            _ => Err(CliError::Config("no scan family for this model kind".into())),
        }
    }

    pub fn scan_spec(&self) -> Result<ScanSpec, CliError> {
        let scan = self.scan.as_ref().expect("validated");
        Ok(ScanSpec {
            family: self.family()?,
            rates: scan.values.clone(),
            sizes: self.model.sizes.clone(),
            mc: self.mc_config(vec![1.0]),
            ladder: self.temperature.ladder,
        })
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec, CliError> {
        let scan = self.scan.as_ref().expect("validated");
        let betas = self.temperature.betas.clone();
        Ok(BoundarySpec {
            family: self.family()?,
            rates: scan.values.clone(),
            betas: betas.clone(),
            sizes: self.model.sizes.clone(),
            mc: self.mc_config(betas),
        })
    }

    /// Model for ensemble mode with disorder drawn from `seed`.
    pub fn build_model(&self, seed: u64) -> Result<SpinModel, CoreError> {
        let lattice = CodeLattice::new(self.model.l1.unwrap_or(0), self.model.l2.unwrap_or(0))?;
        let spec = DisorderSpec::sampled(self.rates, seed);
        let color = self.model.color.unwrap_or(Color::A);
        let pick = |ms: [SpinModel; 3]| ms.into_iter().nth(color.index()).expect("three colours");
        match self.model.kind {
            ModelChoice::Qp => build_qp_model(&lattice, &spec),
            ModelChoice::Bilinear => build_bilinear_models(&lattice, &spec).map(pick),
            ModelChoice::BilinearDual => build_bilinear_dual_models(&lattice, &spec).map(pick),
            ModelChoice::Combined => build_combined_model(&lattice, &spec),
            ModelChoice::GaugeQp => build_gauge_model(GaugeKind::Qp, &lattice, self.model.rounds.unwrap_or(1), &spec),
            ModelChoice::GaugeBilinear => {
                build_gauge_model(GaugeKind::Bilinear(color), &lattice, self.model.rounds.unwrap_or(1), &spec)
            }
        }
    }

    /// Ensemble beta ladder.
    pub fn ensemble_betas(&self) -> Result<Vec<f64>, CliError> {
        if !self.temperature.nishimori {
            return Ok(self.temperature.betas.clone());
        }
        let model = self.build_model(0)?;
        model
            .metadata
            .beta_nishimori
            .map(|b| vec![b])
            .ok_or_else(|| CliError::Config("these rates have no Nishimori temperature".into()))
    }
}
