//! Community detection on sparse graphs by discrete surface-tension
//! minimization.
//!
//! Placeholder crate docs; populated as modules land.

pub mod ac;
pub mod cli;
pub mod datasets;
pub mod energy;
pub mod eval;
pub mod experiment;
pub mod generators;
pub mod mbo;
pub mod mcf;
pub mod pipeline;
pub mod solver;
pub mod spectral;
pub mod error;
pub mod graph;

pub use error::{Error, Result};
