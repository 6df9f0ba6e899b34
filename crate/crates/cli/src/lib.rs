//! Configuration, orchestration and table output for the `cbs` binary.

pub mod args;
pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Mode, Normalization, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, RunReport};
