//! Configuration, checkpoints, diagnostics files and run orchestration.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod run;
