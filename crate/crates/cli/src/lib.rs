//! Command-line front end for `reductionlab`: model and scenario files,
//! verification reports, and the exit-code contract.

pub mod app;
pub mod checks;
pub mod commands;
pub mod error;
pub mod format;

pub use app::run;
pub use error::{exit, CliError, CliResult};
