//! Pairwise finite-size crossings of Binder curves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ThresholdError;

pub const DEFAULT_RESAMPLES: usize = 1000;
const RESAMPLE_SEED: u64 = 0x5eed_c055;

/// One system size's curve on a shared grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub size: usize,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Curves for several sizes over the same scan variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub grid: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl CurveSet {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        if self.grid.len() < 2 {
            return Err(ThresholdError::InvalidScan("crossings need at least two grid points".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ThresholdError::InvalidScan("grid must be strictly increasing".into()));
        }
        if self.curves.len() < 2 {
            return Err(ThresholdError::InvalidScan("crossings need at least two sizes".into()));
        }
        for c in &self.curves {
            if c.values.len() != self.grid.len() || c.errors.len() != self.grid.len() {
                return Err(ThresholdError::InvalidScan(format!("size {} does not cover the grid", c.size)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub small: usize,
    pub large: usize,
    pub value: Option<f64>,
    pub sigma: Option<f64>,
    /// Resampled curve pairs that still cross.
    pub resamples_crossing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Crossing {
    Found {
        value: f64,
        sigma: f64,
        /// Inflation applied when pair crossings disagree beyond their errors.
        scale_factor: f64,
    },
    NoCrossing {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub sizes: Vec<usize>,
    pub resamples: usize,
    pub pairs: Vec<PairCrossing>,
    pub crossing: Crossing,
}

impl ThresholdEstimate {
    pub fn value(&self) -> Option<f64> {
        match self.crossing {
            Crossing::Found { value, .. } => Some(value),
            Crossing::NoCrossing { .. } => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.crossing {
            Crossing::Found { sigma, .. } => Some(sigma),
            Crossing::NoCrossing { .. } => None,
        }
    }
}

/// Roots of the piecewise-linear difference of two curves; the median when
/// there are several.
fn crossing_of(grid: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (d0, d1) = (d[i], d[i + 1]);
        if d0 == 0.0 {
            roots.push(grid[i]);
        } else if d0 * d1 < 0.0 {
            roots.push(grid[i] + (grid[i + 1] - grid[i]) * d0 / (d0 - d1));
        }
    }
    if d[grid.len() - 1] == 0.0 {
        roots.push(grid[grid.len() - 1]);
    }
    if roots.is_empty() {
        return None;
    }
    roots.sort_by(f64::total_cmp);
    let n = roots.len();
    Some(if n % 2 == 1 { roots[n / 2] } else { 0.5 * (roots[n / 2 - 1] + roots[n / 2]) })
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Pairwise crossings over all size pairs, combined by inverse variance.
/// Errors come from a parametric bootstrap over the per-point error bars.
pub fn estimate_crossing(set: &CurveSet, resamples: usize) -> Result<ThresholdEstimate, ThresholdError> {
    set.validate()?;
    let mut curves = set.curves.clone();
    curves.sort_by_key(|c| c.size);
    let mut pairs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(RESAMPLE_SEED);
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i], &curves[j]);
            let value = crossing_of(&set.grid, &a.values, &b.values);
            let mut reps = Vec::with_capacity(resamples);
            for _ in 0..resamples {
                let draw = |c: &Curve, rng: &mut ChaCha8Rng| -> Vec<f64> {
                    c.values
                        .iter()
                        .zip(&c.errors)
                        .map(|(v, e)| v + e * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                        .collect()
                };
                let ra = draw(a, &mut rng);
                let rb = draw(b, &mut rng);
                if let Some(x) = crossing_of(&set.grid, &ra, &rb) {
                    reps.push(x);
                }
            }
            let sigma = if reps.len() >= 2 { Some(std_dev(&reps)) } else { None };
            pairs.push(PairCrossing { small: a.size, large: b.size, value, sigma, resamples_crossing: reps.len() });
        }
    }

    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.resamples_crossing * 2 >= resamples)
        .filter_map(|p| Some((p.value?, p.sigma.unwrap_or(0.0))))
        .collect();
    let crossing = if usable.is_empty() {
        let reason = if pairs.iter().any(|p| p.value.is_some()) {
            "crossings are not robust under resampling".to_string()
        } else {
            "no size pair crosses inside the grid".to_string()
        };
        Crossing::NoCrossing { reason }
    } else if usable.iter().any(|&(_, s)| s == 0.0) {
        // exact inputs: plain average
        let n = usable.len() as f64;
        let value = usable.iter().map(|u| u.0).sum::<f64>() / n;
        let spread = if usable.len() > 1 { std_dev(&usable.iter().map(|u| u.0).collect::<Vec<_>>()) } else { 0.0 };
        Crossing::Found { value, sigma: spread, scale_factor: 1.0 }
    } else {
        let wsum: f64 = usable.iter().map(|&(_, s)| 1.0 / (s * s)).sum();
        let value = usable.iter().map(|&(x, s)| x / (s * s)).sum::<f64>() / wsum;
        let sigma = wsum.sqrt().recip();
        let scale_factor = if usable.len() > 1 {
            let chi2: f64 = usable.iter().map(|&(x, s)| ((x - value) / s).powi(2)).sum();
            (chi2 / (usable.len() - 1) as f64).sqrt().max(1.0)
        } else {
            1.0
        };
        Crossing::Found { value, sigma: sigma * scale_factor, scale_factor }
    };
    Ok(ThresholdEstimate { sizes: curves.iter().map(|c| c.size).collect(), resamples, pairs, crossing })
}
