//! Multi-product operator-splitting integrators.
//!
//! An order-`2n` expansion is a weighted sum of powers of a second-order
//! symmetric kernel; an odd-order expansion sums the odd basis members
//! `U_1..U_n`. Weights are exact rationals from a closed form. Everything
//! numeric is generic over [`numerics::Real`], implemented for [`Double`] and
//! [`Extended`].

pub mod numerics;
pub mod coefficients;
pub mod kernels;
pub mod mpe;
pub mod nystrom;
pub mod problems;
pub mod harness;

/// IEEE binary64.
pub type Double = f64;
pub use numerics::Extended;
/// Exact weights are kept as arbitrary-precision rationals.
pub type Rational = num_rational::BigRational;
