//! Two-dimensional ideal magnetohydrodynamics with GLM divergence cleaning,
//! solved by first-order HLLD finite volumes on either a uniform grid or an
//! adaptive cell-average multiresolution quadtree.

// `!(x > 0.0)` is deliberate: NaN must fail positivity guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod physics;
pub mod riemann;
pub mod fv;
pub mod mr;
pub mod problems;
pub mod diagnostics;
pub mod config;
pub mod snapshot;
pub mod runner;

pub use error::{Error, Result};
