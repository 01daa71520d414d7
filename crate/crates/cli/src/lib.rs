//! Command-line pipeline and HTTP trial service for sampling-with-people
//! experiments.

pub mod cli;
pub mod config;
pub mod error;
pub mod instructions;
pub mod manifest;
pub mod server;
pub mod stages;
pub mod transport;

pub use config::{Backend, Config};
pub use error::CliError;
