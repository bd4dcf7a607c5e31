//! Multi-trial experiments: spec parsing, parallel execution, trace and
//! summary persistence, and coverage audits.

pub mod audit;
pub mod error;
pub mod registry;
pub mod runner;
pub mod spec;
pub mod stats;
pub mod traces;

pub use error::{ExpError, Result};
pub use runner::{run_experiment, Manifest, RunOptions, Summary};
pub use spec::{ExperimentSpec, MethodSpec};
