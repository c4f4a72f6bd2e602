//! Configuration, parallel execution and result output for the `xprob` tool.

pub mod config;
pub mod record;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentKind, OutputFormat, RunConfig};
pub use record::ResultRecord;
pub use runner::{resolve_workers, run, RunError};
