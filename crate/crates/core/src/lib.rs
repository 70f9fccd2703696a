#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod complex;
pub mod error;
pub mod grid;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;
pub mod symmetrized;
pub mod report;
pub mod cli;
pub mod verification;

pub use error::{Error, Result};
