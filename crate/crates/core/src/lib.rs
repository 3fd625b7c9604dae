//! Dual-band beam prediction toolkit.
//!
//! Synthesizes spatially consistent sub-6 GHz / mmWave channel trajectories,
//! labels them with the codebook RF precoder that maximizes the RF-only
//! mutual information, and scores beam predictors by best-n accuracy and
//! reduced-search spectral efficiency.

pub mod channel;
pub mod codebook;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod linalg;
pub mod precoding;
pub mod rng;
pub mod scores;
pub mod search;

pub use config::{Panel, RunConfig, ScenarioConfig};
pub use error::{Error, Result};
pub use exec::Execution;
