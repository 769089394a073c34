//! Exact local calculus on super Riemann surfaces.
//!
//! Grassmann arithmetic with rational coefficients, supermatrices and their
//! Berezinians, truncated Laurent superseries, superconformal coordinate
//! changes, and the assembly of super Mumford form coefficients from
//! transition-function data.

pub mod cli;
pub mod error;
pub mod grassmann;
pub mod json;
pub mod moduli_ranks;
pub mod mumford;
pub mod random;
pub mod superconformal;
pub mod supermatrix;
pub mod superseries;

pub use error::{Error, Result};
pub use grassmann::{Grassmann, Parity, Rational};
pub use supermatrix::SuperMatrix;
