//! IO, experiment runner and command-line support for `cda-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;

pub use error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
