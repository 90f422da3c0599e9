//! Model families scanned along a single error rate.

use std::fmt;

use msc_core::models::{
    build_bilinear_dual_models, build_bilinear_models, build_combined_model, build_qp_model, combined_couplings,
    nishimori_beta, DisorderRates, DisorderSpec, SpinModel,
};
use msc_core::{CodeLattice, Color, CoreError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// Three-spin model of single-site errors, rate `p`.
    Qp,
    /// Two-spin model of one colour's bilinears, rate `q`.
    Bilinear { color: Color },
    BilinearDual { color: Color },
    /// Combined model scanned in `p` at fixed `q`.
    CombinedP { q: f64 },
    /// Combined model scanned in `q` at fixed `p`.
    CombinedQ { p: f64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Qp => write!(f, "qp"),
            Family::Bilinear { color } => write!(f, "bilinear-{color}"),
            Family::BilinearDual { color } => write!(f, "bilinear-dual-{color}"),
            Family::CombinedP { q } => write!(f, "combined-q{q}"),
            Family::CombinedQ { p } => write!(f, "combined-p{p}"),
        }
    }
}

impl Family {
    fn rates(&self, x: f64) -> DisorderRates {
        match *self {
            Family::Qp => DisorderRates::qp(x),
            Family::Bilinear { .. } | Family::BilinearDual { .. } => DisorderRates::bilinear(x),
            Family::CombinedP { q } => DisorderRates { p: x, q, ..Default::default() },
            Family::CombinedQ { p } => DisorderRates { p, q: x, ..Default::default() },
        }
    }

    /// Model on an `size x size` torus with disorder at rate `x`.
    pub fn build(&self, size: usize, x: f64, seed: u64) -> Result<SpinModel, CoreError> {
        let lattice = CodeLattice::new(size, size)?;
        let spec = DisorderSpec::sampled(self.rates(x), seed);
        Ok(match *self {
            Family::Qp => build_qp_model(&lattice, &spec)?,
            Family::Bilinear { color } => pick(build_bilinear_models(&lattice, &spec)?, color),
            Family::BilinearDual { color } => pick(build_bilinear_dual_models(&lattice, &spec)?, color),
            Family::CombinedP { .. } | Family::CombinedQ { .. } => build_combined_model(&lattice, &spec)?,
        })
    }

    /// Inverse temperature on the Nishimori line at rate `x`.
    pub fn nishimori_beta(&self, x: f64) -> Result<f64, CoreError> {
        match *self {
            Family::Qp | Family::Bilinear { .. } | Family::BilinearDual { .. } => nishimori_beta(x),
            Family::CombinedP { q } => Ok(combined_couplings(x, q)?.2),
            Family::CombinedQ { p } => Ok(combined_couplings(p, x)?.2),
        }
    }
}

fn pick(models: [SpinModel; 3], color: Color) -> SpinModel {
    models.into_iter().nth(color.index()).expect("three colours")
}
