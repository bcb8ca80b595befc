//! Batch front-end for the `maxwell-ocp` solver: configuration files, named
//! benchmark runs, and CSV/VTK output.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod output;

pub use app::{run_config, run_file, CliError, RunOptions, RunOutcome};
pub use config::{parse_config, RunConfig};
