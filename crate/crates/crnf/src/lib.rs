//! Exact formal normal forms of almost CR structures.
//!
//! The core is generic over a real [`Scalar`]; the exact instantiation over
//! exact rationals is exposed through the aliases below.

pub mod error;
pub mod frames;
pub mod io;
pub mod linalg;
pub mod normalize;
pub mod rational;
pub mod scalar;
pub mod series;
pub mod structure;
pub mod transform;

pub use error::{CrError, Result};
pub use scalar::Scalar;

/// Exact rational with an inline fast path and big-integer fallback.
pub use rational::Rational;
/// Complex number with rational parts.
pub type GaussianRational = num_complex::Complex<Rational>;
pub type ExactSeries = series::Series<Rational>;
pub type ExactMatrix = series::SeriesMatrix<Rational>;
