//! Numerical toolkit for conservation laws augmented by diffusive and
//! dispersive terms, with entropy-balance diagnostics.

pub mod admissibility;
pub mod augmentation;
pub mod diagnostics;
pub mod error;
pub mod expr;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
pub use nalgebra;
