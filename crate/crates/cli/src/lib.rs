//! Command-line front end: configuration loading, the commands, and exit
//! codes.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;

pub use commands::Context;
pub use error::CliError;
