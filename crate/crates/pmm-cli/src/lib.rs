//! Configuration, dispatch and output for the `pmm` command.

pub mod config;
pub mod run;

pub use config::{Command, ConfigError, Parsed, RunConfig};
pub use run::{run, RunError};
