//! Numerical laboratory for the classical obstacle problem.

pub mod ansatz;
pub mod blowup;
pub mod diagnostics;
pub mod grid;
pub mod heleshaw;
pub mod obstacle;
pub mod poly;
pub mod scalar;
pub mod signorini;

pub use num_rational::BigRational as Rational;
pub type ExactPoly = poly::Poly<Rational>;
pub type ExactHomoPoly = poly::HomoPoly<Rational>;
pub type FloatPoly = poly::Poly<f64>;
pub type Grid = grid::GridField<f64>;
