//! Scenario files, runners and report output for the `mmkey` command.
//!
//! A run goes config → [`run::run`] → [`report::emit_report`]. Runners only
//! call into `mmkey-core`; every number in a report can be recomputed from
//! the echoed config and seed.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Scenario, ScenarioConfig, SCHEMA_VERSION};
pub use error::HarnessError;
pub use report::{emit_report, OutputPaths, RunOutput, RunReport};
pub use run::{dh_rate, run, run_exp1, run_exp2, run_exp3_position, run_platoon};
