//! Library side of the `rfm` command-line tool: argument definitions, input
//! parsing and report emission.

pub mod commands;
pub mod error;
pub mod input;
pub mod report;

pub use commands::{run, Cli};
pub use error::{exit, CliError};
