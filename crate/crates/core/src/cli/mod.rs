//! Experiment configuration, report generation, and the acceptance suite
//! behind the `dupkit` binary.

pub mod config;
pub mod instances;
pub mod report;
pub mod verify;

pub use config::{emit_config, parse_config, ExperimentConfig, Format};
pub use report::{run_experiment, Report};
pub use verify::{verify_all, Expectations, Summary};
