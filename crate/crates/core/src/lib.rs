// `!(x > 0.0)` is used on purpose so that NaN is rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod subspace;
pub mod train;

pub use error::{Error, Result};
