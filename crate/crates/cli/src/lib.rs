//! Configuration-driven driver for the waveguide pipeline: frames, fibre
//! modes, effective and direct spectra, and ε-sweeps written as CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
