#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod incompressible;
pub mod initial;
pub mod stochastic;

pub use error::{IsmError, Result, StepFailure};
