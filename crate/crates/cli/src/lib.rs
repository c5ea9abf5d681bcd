//! Scenario runner for the `condensate-twa` simulator.
//!
//! A run is described by a TOML file (see [`config`]) and writes a manifest
//! plus plot-ready CSV or JSON tables into its output directory.

pub mod config;
pub mod scenario;

pub use config::{validate_config, ScenarioConfig};
pub use scenario::{run_scenario, RunError, RunSummary};
