//! Exact multivariate polynomials.
//!
//! Polynomials are stored as sums of homogeneous parts with coefficients in
//! any [`Scalar`](crate::scalar::Scalar); the exact code paths use
//! `BigRational`.

mod harmonic;
mod homo;
mod io;
mod linalg;
mod monomial;
mod polynomial;
mod sphere;

pub use harmonic::{harmonic_basis, harmonic_dimension, harmonic_extension, Parity};
pub use homo::HomoPoly;
pub use io::{from_text, to_text, CoeffText};
pub use linalg::solve_square;
pub use monomial::{count_of_degree, Monomial};
pub use polynomial::Poly;
pub use sphere::{
    ball_volume, moment_fraction, sphere_area, sphere_inner, sphere_mean, SphereInner,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },
    #[error("polynomial is not divisible by the linear form")]
    NotDivisible,
    #[error("parse error: {0}")]
    Parse(String),
}
