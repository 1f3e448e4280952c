//! Configuration, scenarios and CSV output for the `plastiflow` binary.

pub mod config;
pub mod output;
pub mod scenario;

pub use config::{parse_config, parse_config_file, ConfigError, GridSpec, RunConfig, RushSpec, TopologySpec};
pub use scenario::{run_scenario, select_best_params, ScenarioError, ScenarioKind};
