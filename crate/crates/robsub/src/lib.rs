//! File formats, reports, and the command-line front end for `robsub-core`.

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod report;

pub use error::CliError;
