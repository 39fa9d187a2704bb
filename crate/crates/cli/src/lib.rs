//! Batch front end: a TOML config names a model and a list of tasks; tables
//! are written as CSV and verification verdicts collected in `report.json`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::RunConfig;
pub use run::{run, Mode, Outcome};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/batch.md")]
mod batch_chapter {}
