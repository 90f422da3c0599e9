//! Exact enumeration oracles for small codes and spin models.

pub mod classes;
pub mod error;
pub mod exact;
pub mod mapping;
pub mod nishimori;
pub mod sum;
pub mod verify;

pub use error::OracleError;
pub use exact::{exact_partition, ExactResult};
pub use mapping::{mapping_consistency_check, MappingModel, MappingReport};
pub use verify::{run_verification, VerifyOptions, VerifyReport};
