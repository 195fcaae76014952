//! Command line front end: model-spec parsing, command dispatch and output.

pub mod commands;
pub mod error;
pub mod spec;

pub use commands::{Format, Overrides};
pub use error::CliError;
pub use spec::ModelSpec;
