//! File formats, reports and the command-line pipeline around
//! `levelk-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod files;
pub mod manifest;
pub mod ngsim;
pub mod reports;

pub use config::RunConfig;
pub use error::CliError;
