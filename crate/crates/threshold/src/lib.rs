//! Threshold estimation from finite-size Binder-cumulant crossings along the
//! Nishimori line, and critical temperatures at fixed disorder.

pub mod crossing;
pub mod error;
pub mod family;
pub mod output;
pub mod scan;

pub use crossing::{estimate_crossing, Crossing, Curve, CurveSet, ThresholdEstimate};
pub use error::ThresholdError;
pub use family::Family;
pub use scan::{nishimori_scan, phase_boundary, scan_threshold, BoundarySpec, PhaseBoundary, ScanResult, ScanSpec};
