//! Toolkit for the large deviations of empirical measures of Markov chains
//! whose state space splits into several communication classes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classes;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod kernels;
pub mod mc;
pub mod measures;
pub mod stats;
pub mod trajectory;
pub mod zoo;

pub use error::{Error, Result};
