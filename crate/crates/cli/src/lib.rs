//! File formats, published-table fixtures and the command-line front end
//! for `mvpois`.

pub mod commands;
pub mod error;
pub mod fixtures;
pub mod reproduce;
pub mod table;

pub use error::{CliError, CliResult};
