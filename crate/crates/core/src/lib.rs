//! Majorana surface code on the honeycomb torus: lattice geometry, stabilizer
//! algebra, error sampling and the mapped classical spin models.

pub mod algebra;
pub mod error;
pub mod gf2;
pub mod lattice;
pub mod models;
pub mod noise;
pub mod rng;

pub use error::CoreError;
pub use lattice::{CodeLattice, Color};
