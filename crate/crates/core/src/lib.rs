//! Fairness auditing and global explainability for binary classifiers over
//! tabular data.
//!
//! The crate covers the full audit loop: train or wrap a model, measure
//! per-group performance against tolerance bands, test mitigations, sweep
//! feature risk curves, and record everything in a reproducible ledger.

pub mod audit;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod curves;
pub mod error;
pub mod ledger;
pub mod mitigation;
pub mod model;
pub mod numeric;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
