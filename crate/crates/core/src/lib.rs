//! Compressed randomized UTV (CoR-UTV) decompositions for low-rank matrix
//! approximation, robust PCA solvers built on them, and the synthetic
//! experiment harnesses used to evaluate both.

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod randla;
pub mod rpca;
pub mod testgen;

pub use error::{Error, Result};
pub use matrix::Matrix;
