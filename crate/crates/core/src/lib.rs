//! Numerical laboratory for exponential decay of correlations of expanding semiflows
//! and hyperbolic skew-product flows.

pub mod applications;
pub mod cone;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod quadrature;
pub mod skew;
pub mod stats;
pub mod suspension;
pub mod transfer;
pub mod uni;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use num_complex::Complex64;
