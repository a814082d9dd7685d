//! Scalar abstraction shared by the double and double-double numeric paths.
//!
//! Channel matrices and the exact-inverse estimator are written once against
//! [`Real`]; `f64` is the fast path and [`TwoFloat`] (about 106 bits of
//! mantissa) is used when the inverse of a weight-transition matrix loses too
//! many digits to cancellation.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use twofloat::TwoFloat;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;

    /// Division at full working precision.
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }
}

impl Real for TwoFloat {
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }

    fn abs(self) -> Self {
        TwoFloat::abs(&self)
    }

    // The crate's quotient is only about double accurate; one Newton step
    // restores the remaining digits.
    fn quot(self, rhs: Self) -> Self {
        let q = self / rhs;
        q + (self - q * rhs) / rhs
    }
}

/// Working precision for linear solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// IEEE double only.
    Double,
    /// Double-double throughout.
    Extended,
    /// Double first, falling back to double-double when the residual check fails.
    Auto,
}
