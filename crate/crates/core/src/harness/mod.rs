//! Config-driven scenarios, Sun–Earth–Moon estimates and run artifacts.

pub mod config;
pub mod constants;
pub mod output;
pub mod run;
pub mod sem;

pub use config::{LoadedConfig, ScenarioConfig, ScenarioKind};
pub use constants::Constants;
pub use output::{Format, Manifest};
pub use run::{run_scenario, RunOutcome};
