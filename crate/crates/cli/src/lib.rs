//! Experiment harness around `featgenn-core`: dataset manifest, config file,
//! the five experiment commands and their CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod reference;
pub mod report;

pub use commands::{cmd_baseline, cmd_bench, cmd_compare_pooling, cmd_data_fraction, cmd_run, CommandOutput};
pub use config::{ConfigError, ExperimentConfig, Overrides};

/// Exit status when every requested run completed.
pub const EXIT_OK: i32 = 0;
/// Exit status when at least one run failed.
pub const EXIT_RUN_FAILED: i32 = 1;
/// Exit status for unreadable or invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
