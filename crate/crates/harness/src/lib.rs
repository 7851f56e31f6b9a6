//! Scenario runner for the gradient echo memory simulator: configuration,
//! factorized and full pipelines, analysis, sweeps and file output.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod sweep;

pub use config::{load_config, parse_config, RawConfig, ScenarioConfig, ScenarioId};
pub use error::{HarnessError, Result};
pub use scenario::{run_scenario, ScenarioResult};
