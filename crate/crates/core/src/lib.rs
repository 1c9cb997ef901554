//! Numerical laboratory for steady non-classical linear transport, where
//! the free-path distribution between collisions is a general law `p(s)`.

// NaN must fail validation, so `!(x > 0.0)` is used deliberately.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod config;
pub mod error;
pub mod harness;
pub mod mc;
pub mod model;
pub mod pathlen;
pub mod quad;
pub mod scatter;
pub mod spectral;
pub mod sphere;
pub mod symbol;

pub use error::{NctkError, Result};
