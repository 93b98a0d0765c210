//! Command implementations behind the `robustbell` binary.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_compare, cmd_evaluate, cmd_quantizer, cmd_solve, cmd_stability};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
