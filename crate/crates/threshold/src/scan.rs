//! Nishimori-line scans and fixed-rate temperature scans, with an on-disk
//! cache keyed by the hash of each point's full configuration.

use std::fs;
use std::path::Path;

use msc_mc::{run_disorder_ensemble, EnsembleResult, McConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crossing::{estimate_crossing, Curve, CurveSet, ThresholdEstimate, DEFAULT_RESAMPLES};
use crate::error::ThresholdError;
use crate::family::Family;

pub const CACHE_VERSION: u32 = 1;

/// Hex SHA-256 of the JSON encoding.
pub fn hash_json<T: Serialize>(value: &T) -> Result<String, ThresholdError> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Serialize)]
struct PointKey<'a> {
    version: u32,
    family: &'a Family,
    rate: f64,
    size: usize,
    config: &'a McConfig,
}

#[derive(Serialize, Deserialize)]
struct CachedPoint {
    key: String,
    family: Family,
    rate: f64,
    size: usize,
    result: EnsembleResult,
}

struct PointOutcome {
    key: String,
    result: EnsembleResult,
    cached: bool,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ThresholdError> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_point(
    family: &Family,
    rate: f64,
    size: usize,
    betas: Vec<f64>,
    base: &McConfig,
    cache: Option<&Path>,
) -> Result<PointOutcome, ThresholdError> {
    let mut cfg = base.clone();
    cfg.betas = betas;
    let key = hash_json(&PointKey { version: CACHE_VERSION, family, rate, size, config: &cfg })?;
    let digest = hex::decode(&key).expect("hex digest");
    cfg.seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));

    let path = cache.map(|dir| dir.join(format!("{key}.json")));
    if let Some(path) = &path {
        if path.exists() {
            let text = fs::read_to_string(path)?;
            let hit: CachedPoint = serde_json::from_str(&text)
                .map_err(|e| ThresholdError::Cache { path: path.display().to_string(), message: e.to_string() })?;
            if hit.key != key {
                return Err(ThresholdError::Cache { path: path.display().to_string(), message: "key mismatch".into() });
            }
            log::debug!("cache hit {family} rate {rate} size {size}");
            return Ok(PointOutcome { key, result: hit.result, cached: true });
        }
    }
    log::info!("running {family} rate {rate} size {size}");
    let builder = |seed: u64| family.build(size, rate, seed);
    let result = run_disorder_ensemble(&builder, &cfg)?;
    if let Some(path) = &path {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let entry = CachedPoint { key: key.clone(), family: *family, rate, size, result };
        write_atomic(path, &serde_json::to_vec(&entry)?)?;
        return Ok(PointOutcome { key, result: entry.result, cached: false });
    }
    Ok(PointOutcome { key, result, cached: false })
}

/// One CSV row: a single (rate, beta, size) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub family: String,
    pub p: f64,
    pub beta: f64,
    #[serde(rename = "L")]
    pub size: usize,
    #[serde(rename = "U_q")]
    pub binder: f64,
    #[serde(rename = "U_q_err")]
    pub binder_err: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_err")]
    pub energy_err: f64,
    pub n_disorder: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub rate: f64,
    pub size: usize,
    pub beta: f64,
    pub binder: f64,
    pub binder_err: f64,
    pub binder_total: f64,
    pub energy: f64,
    pub energy_err: f64,
    pub samples: usize,
    pub excluded: usize,
    pub flagged: bool,
    /// Cache key of the full ensemble result.
    pub key: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub family: Family,
    pub rates: Vec<f64>,
    pub sizes: Vec<usize>,
    /// Run settings; the temperature ladder is replaced per point.
    pub mc: McConfig,
    /// Tempering ladder ending at each point's Nishimori beta; a single
    /// temperature when absent.
    #[serde(default)]
    pub ladder: Option<Ladder>,
}

/// Geometric beta ladder from `beta_min` up to a target beta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub temperatures: usize,
    pub beta_min: f64,
}

impl Ladder {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        if self.temperatures < 2 || !(self.beta_min > 0.0 && self.beta_min.is_finite()) {
            return Err(ThresholdError::InvalidScan("ladder needs at least 2 temperatures and beta_min > 0".into()));
        }
        Ok(())
    }

    /// Ascending betas ending exactly at `target`; just `[target]` when the
    /// target is not above `beta_min`.
    pub fn betas(&self, target: f64) -> Vec<f64> {
        if target <= self.beta_min {
            return vec![target];
        }
        let k = self.temperatures - 1;
        let ratio = target / self.beta_min;
        let mut b: Vec<f64> = (0..k).map(|i| self.beta_min * ratio.powf(i as f64 / k as f64)).collect();
        b.push(target);
        b
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), ThresholdError> {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() < 2 || s.len() != sizes.len() {
        return Err(ThresholdError::InvalidScan("need at least two distinct sizes".into()));
    }
    if s[0] < 2 {
        return Err(ThresholdError::InvalidScan("sizes must be at least 2".into()));
    }
    Ok(())
}

fn check_increasing(name: &str, xs: &[f64]) -> Result<(), ThresholdError> {
    if xs.is_empty() || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ThresholdError::InvalidScan(format!("{name} must be non-empty and strictly increasing")));
    }
    Ok(())
}

impl ScanSpec {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        check_sizes(&self.sizes)?;
        check_increasing("rates", &self.rates)?;
        if let Some(r) = self.rates.iter().find(|&&r| !(r > 0.0 && r < 0.5)) {
            return Err(ThresholdError::InvalidScan(format!("rate {r} outside (0, 0.5)")));
        }
        match &self.ladder {
            Some(l) => l.validate(),
            None => Ok(()),
        }
    }

    pub fn hash(&self) -> Result<String, ThresholdError> {
        hash_json(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub rates: Vec<f64>,
    pub config_hash: String,
    pub points: Vec<ScanPoint>,
    /// Points run in this invocation and points read from the cache.
    pub computed: usize,
    pub cached: usize,
}

fn scan_point(rate: f64, size: usize, beta: f64, out: &PointOutcome) -> ScanPoint {
    let b = out.result.betas.last().expect("non-empty ladder");
    ScanPoint {
        rate,
        size,
        beta,
        binder: b.binder,
        binder_err: b.binder_err,
        binder_total: b.binder_total,
        energy: b.energy,
        energy_err: b.energy_err,
        samples: out.result.included,
        excluded: out.result.excluded,
        flagged: out.result.flagged,
        key: out.key.clone(),
    }
}

impl ScanResult {
    pub fn point(&self, rate: f64, size: usize) -> Option<&ScanPoint> {
        self.points.iter().find(|p| p.rate == rate && p.size == size)
    }

    pub fn curves(&self) -> CurveSet {
        CurveSet {
            grid: self.rates.clone(),
            curves: self
                .sizes
                .iter()
                .map(|&l| {
                    let pts: Vec<&ScanPoint> = self.rates.iter().map(|&r| self.point(r, l).expect("full grid")).collect();
                    Curve {
                        size: l,
                        values: pts.iter().map(|p| p.binder).collect(),
                        errors: pts.iter().map(|p| p.binder_err).collect(),
                    }
                })
                .collect(),
        }
    }

    pub fn rows(&self) -> Vec<GridRow> {
        self.points
            .iter()
            .map(|p| GridRow {
                family: self.family.to_string(),
                p: p.rate,
                beta: p.beta,
                size: p.size,
                binder: p.binder,
                binder_err: p.binder_err,
                energy: p.energy,
                energy_err: p.energy_err,
                n_disorder: p.samples + p.excluded,
                excluded: p.excluded,
            })
            .collect()
    }
}

/// Disorder-averaged Binder cumulant at the Nishimori temperature of every
/// (rate, size) grid point.
pub fn nishimori_scan(spec: &ScanSpec, cache: Option<&Path>) -> Result<ScanResult, ThresholdError> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec.rates.iter().flat_map(|&r| spec.sizes.iter().map(move |&l| (r, l))).collect();
    let outcomes: Vec<Result<(ScanPoint, bool), ThresholdError>> = jobs
        .par_iter()
        .map(|&(rate, size)| {
            let beta = spec.family.nishimori_beta(rate)?;
            let betas = spec.ladder.map_or_else(|| vec![beta], |l| l.betas(beta));
            let out = run_point(&spec.family, rate, size, betas, &spec.mc, cache)?;
            Ok((scan_point(rate, size, beta, &out), out.cached))
        })
        .collect();
    let mut points = Vec::with_capacity(jobs.len());
    let mut cached = 0;
    for o in outcomes {
        let (p, hit) = o?;
        cached += usize::from(hit);
        points.push(p);
    }
    Ok(ScanResult {
        family: spec.family,
        sizes: spec.sizes.clone(),
        rates: spec.rates.clone(),
        config_hash: spec.hash()?,
        computed: points.len() - cached,
        cached,
        points,
    })
}

/// Crossing of the scan's Binder curves in the rate.
pub fn scan_threshold(scan: &ScanResult) -> Result<ThresholdEstimate, ThresholdError> {
    estimate_crossing(&scan.curves(), DEFAULT_RESAMPLES)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub family: Family,
    /// Rates may include 0 (clean model).
    pub rates: Vec<f64>,
    pub betas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub mc: McConfig,
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        check_sizes(&self.sizes)?;
        check_increasing("betas", &self.betas)?;
        if self.betas.len() < 2 || self.betas[0] < 0.0 {
            return Err(ThresholdError::InvalidScan("need at least two non-negative temperatures".into()));
        }
        check_increasing("rates", &self.rates)?;
        if let Some(r) = self.rates.iter().find(|&&r| !(0.0..0.5).contains(&r)) {
            return Err(ThresholdError::InvalidScan(format!("rate {r} outside [0, 0.5)")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub rate: f64,
    pub beta_c: Option<f64>,
    pub beta_err: Option<f64>,
    pub t_c: Option<f64>,
    pub t_err: Option<f64>,
    pub estimate: ThresholdEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub betas: Vec<f64>,
    pub config_hash: String,
    pub points: Vec<BoundaryPoint>,
    pub grid: Vec<GridRow>,
    pub computed: usize,
    pub cached: usize,
}

/// Per rate, the crossing in beta of the Binder curves of all sizes.
pub fn phase_boundary(spec: &BoundarySpec, cache: Option<&Path>) -> Result<PhaseBoundary, ThresholdError> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec.rates.iter().flat_map(|&r| spec.sizes.iter().map(move |&l| (r, l))).collect();
    let outcomes: Vec<Result<PointOutcome, ThresholdError>> = jobs
        .par_iter()
        .map(|&(rate, size)| run_point(&spec.family, rate, size, spec.betas.clone(), &spec.mc, cache))
        .collect();
    let mut runs = Vec::with_capacity(jobs.len());
    for o in outcomes {
        runs.push(o?);
    }
    let cached = runs.iter().filter(|r| r.cached).count();

    let mut grid = Vec::new();
    let mut points = Vec::new();
    for (ri, &rate) in spec.rates.iter().enumerate() {
        let mut curves = Vec::new();
        for (si, &size) in spec.sizes.iter().enumerate() {
            let res = &runs[ri * spec.sizes.len() + si].result;
            for b in &res.betas {
                grid.push(GridRow {
                    family: spec.family.to_string(),
                    p: rate,
                    beta: b.beta,
                    size,
                    binder: b.binder,
                    binder_err: b.binder_err,
                    energy: b.energy,
                    energy_err: b.energy_err,
                    n_disorder: res.samples,
                    excluded: res.excluded,
                });
            }
            curves.push(Curve {
                size,
                values: res.betas.iter().map(|b| b.binder).collect(),
                errors: res.betas.iter().map(|b| b.binder_err).collect(),
            });
        }
        let estimate = estimate_crossing(&CurveSet { grid: spec.betas.clone(), curves }, DEFAULT_RESAMPLES)?;
        let (beta_c, beta_err) = (estimate.value(), estimate.sigma());
        points.push(BoundaryPoint {
            rate,
            beta_c,
            beta_err,
            t_c: beta_c.map(f64::recip),
            t_err: beta_c.zip(beta_err).map(|(b, s)| s / (b * b)),
            estimate,
        });
    }
    Ok(PhaseBoundary {
        family: spec.family,
        sizes: spec.sizes.clone(),
        betas: spec.betas.clone(),
        config_hash: hash_json(spec)?,
        points,
        grid,
        computed: runs.len() - cached,
        cached,
    })
}
