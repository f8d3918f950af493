//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type used for scores, features, weights and kernel algebra.
///
/// Implemented for `f32` and `f64`. Tolerances are expressed per type since
/// the invariants that hold to `1e-12` in double precision only hold to a few
/// ulps in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr<Err = ParseFloatError>
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Allowed deviation of a normalized score row sum from one.
    const ROW_SUM_TOL: f64;
    /// Allowed deviation of a simplex weight vector sum from one.
    const SIMPLEX_TOL: f64;
    /// Relative residual bound for a successful linear solve.
    const SOLVE_TOL: f64;

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    const ROW_SUM_TOL: f64 = 1e-9;
    const SIMPLEX_TOL: f64 = 1e-12;
    const SOLVE_TOL: f64 = 1e-8;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const ROW_SUM_TOL: f64 = 1e-5;
    const SIMPLEX_TOL: f64 = 1e-5;
    const SOLVE_TOL: f64 = 1e-3;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Index of the largest entry, ties resolved to the smallest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}
