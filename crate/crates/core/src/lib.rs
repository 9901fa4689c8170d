//! Stigmergic ant-colony clustering (ACLUSTER) coupled with a linear genetic
//! programming forecaster.
//!
//! The crate is organised bottom-up:
//!
//! - [`habitat`]: the toroidal grid with item slots, agent occupancy and a
//!   pheromone field.
//! - [`swarm`]: per-agent kernels (pheromone-biased movement, threshold
//!   governed pick/drop voting).
//! - [`colony`]: the simulation driver plus entropy, cluster extraction,
//!   purity and snapshot export.
//! - [`lgp`]: a register-machine VM, variation operators and a steady-state
//!   island-model evolver.
//! - [`mining`]: CSV ingestion, normalisation, supervised windowing, synthetic
//!   fixtures and the RMSE/CC report.
//! - [`config`]: the flat dotted-key run configuration and seed derivation.

pub mod colony;
pub mod config;
pub mod error;
pub mod habitat;
pub mod item;
pub mod lgp;
pub mod mining;
pub mod pipeline;
pub mod swarm;

pub use error::{Error, Result};
pub use item::DataItem;
