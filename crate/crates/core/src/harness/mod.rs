//! Command-line plumbing: configuration, trial orchestration and result
//! files.

pub mod config;
pub mod io;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use io::{emit_results, Cell, Record};
pub use run::{run_experiment, RunManifest, RunOutcome};
