//! Oracle-loss ensemble training.
//!
//! Trains ensembles of small dense classifiers so that *at least one* member is
//! right on each example. The central method is stochastic multiple choice
//! learning: every SGD batch is forwarded through all members, each example is
//! assigned to its lowest-loss member(s), and only those winners receive that
//! example's gradient. Coordinate-descent MCL, independently trained ensembles
//! and sequential reweighting are provided as baselines over the same engine.
//!
//! Modules, bottom up:
//!
//! - [`engine`]: tensors, layers, loss, backward pass, SGD, gradient checking
//! - [`ensemble`]: loss matrices, winner assignment, oracle metrics
//! - [`datasets`]: synthetic generators, IDX/CSV loaders, batch plans
//! - [`trainers`]: sMCL, MCL, independent, and Dey-style training
//! - [`harness`]: sweeps, run records, CSV/JSON reports, timing comparison
//!
//! Per-member work runs on rayon when the `parallel` feature is enabled (the
//! default). Results are bit-identical with and without it.

pub mod cli;
pub mod datasets;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod parallel;
pub mod rng;
pub mod trainers;

pub use error::{Error, Result};

/// Crate version recorded in run records.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
