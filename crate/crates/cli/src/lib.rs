//! Batch runner for reproducible space-time coding experiments.
//!
//! A job is a JSON document parsed into [`ExperimentConfig`]; running it
//! writes CSV and JSON artifacts plus a `manifest.json` into an output
//! directory. Every CSV opens with a comment line naming the config hash,
//! the seed and the generator.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_value, ConfigError, ExperimentConfig, SchemaError};
pub use run::{run_experiment, Manifest, RunError, Status};
