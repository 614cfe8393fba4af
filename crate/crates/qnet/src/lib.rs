//! Command-line front end for `qnet-core`: JSON configs in, CSV or JSON
//! tables out.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, Format, OutputKind, RunConfig, SimulationSettings};
pub use error::CliError;
