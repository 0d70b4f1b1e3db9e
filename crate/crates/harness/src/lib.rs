//! Benchmark harness for the no-wait flow shop solvers.

pub mod error;
pub mod taillard;

pub use error::{HarnessError, Result};
pub mod registry;
pub mod report;
pub mod experiment;
