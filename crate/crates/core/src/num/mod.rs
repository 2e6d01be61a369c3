//! Numerical primitives: normal distribution functions, root finding and
//! Gauss-Hermite quadrature.

pub mod brent;
pub mod hermite;
pub mod normal;
