//! Command-line front end: configuration, command dispatch and file output.
//!
//! The binary `floqlind` is a thin wrapper around [`run::run`]; everything it
//! does is also reachable from tests through this library.

pub mod config;
pub mod emit;
pub mod oracle;
pub mod presets;
pub mod run;
pub mod svg;

pub use config::{parse_config, parse_config_str, Command, ConfigError, Overrides, RunConfig};
pub use run::{run, RunError, RunOutcome};
