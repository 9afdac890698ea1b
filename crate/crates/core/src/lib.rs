//! Exact and numerical tools for the divisor function in arithmetic
//! progressions: divisor sums and their main/error-term decomposition,
//! Kloosterman and bilinear Kloosterman sums, the Voronoi expansion of the
//! error term, Poisson summation for divisor-weighted test functions, and
//! multiplicative character sums modulo primes.

pub mod arith;
pub mod bilinear;
pub mod characters;
pub mod error;
pub mod kloosterman;
pub mod main_term;
pub mod numeric;
pub mod tau;
pub mod voronoi;

mod par;

pub use error::{Error, Result};
