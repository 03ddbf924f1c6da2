//! Numerical laboratory for boundary-value experiments on Lipschitz-graph
//! domains: dyadic decompositions adapted to the graph, stopping-time
//! approximants with Carleson-measure diagnostics, cone/area functionals,
//! oscillation-counting boundary statistics, and a good-lambda martingale
//! checker, all driven by a small CLI (`lab`).

pub mod approximant;
pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod goodlambda;
pub mod grid;
pub mod operators;

pub use error::{LabError, Result};
