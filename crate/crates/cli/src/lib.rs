//! Experiment runner: scenario configs, presets and the simulate, estimate,
//! aggregate pipeline behind the `lowrank-sysid` binary.

pub mod config;
pub mod presets;
pub mod scenario;

pub use config::{FieldError, Kind, ScenarioConfig};
