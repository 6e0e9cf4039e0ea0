//! Scenario runner for the echo simulator: JSON configs in, traces, rate
//! fits, Wigner snapshots and manifests out.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{RunMode, ScenarioConfig};
pub use error::CliError;
pub use runner::{run_oracle, run_scan_d, run_scenario, RunOutcome};
