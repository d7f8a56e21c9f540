//! Config-driven runner for `spinrs`: reads a flat key-value file, runs one
//! command and writes CSV tables plus a JSON summary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, Command, ConfigError, RunConfig};
pub use run::{run, RunError, RunOutcome};
