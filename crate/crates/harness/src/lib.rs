//! Experiment harness for the movable-antenna power minimizer: scenario and
//! sweep files in, CSV tables, JSON summaries and SVG charts out.
//!
//! Each command is a `run_*` function that returns a report, paired with a
//! `write_*` function that renders it into an output directory. The `ma-array`
//! binary wires them to the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod plot;

pub use error::{HarnessError, Result};
