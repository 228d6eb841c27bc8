// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod denoise;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod linalg;
pub mod qstate;
pub mod train;

pub use error::{Error, Result};
