//! Library surface of the command-line front end, exposed so integration
//! tests can drive the commands without spawning processes.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;

pub use commands::Overrides;
pub use config::RunConfig;
pub use error::CliError;
