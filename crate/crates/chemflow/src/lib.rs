//! Configuration, file formats and experiment orchestration around
//! [`chemflow_core`].
//!
//! The `chemflow` binary is a thin wrapper over [`commands::execute`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod torf;

pub use commands::{execute, Command, Invocation, Outcome};
pub use config::{ConfigError, Experiment, Overrides};
pub use error::CliError;
pub use output::{RunManifest, TerminationKind};
