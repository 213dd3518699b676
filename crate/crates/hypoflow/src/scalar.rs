//! Coefficient abstraction: double precision for flows, exact rationals for
//! classification.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::ToPrimitive;

/// Exact rational coefficients with arbitrary-precision integers.
pub type Rational = num_rational::BigRational;

/// Coefficient field for exterior-algebra and Lie-algebra computations.
///
/// Implemented by `f64` (approximate) and [`Rational`] (exact). Exact types
/// ignore tolerances in [`Scalar::is_negligible`].
pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;

    /// Magnitude used for pivot selection and residual reporting.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Whether the value should be treated as zero at the given tolerance.
    /// Exact types test exact vanishing.
    fn is_negligible(&self, tol: f64) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }

    fn one() -> Self {
        num_traits::One::one()
    }

    fn from_int(n: i64) -> Self {
        Rational::from_integer(n.into())
    }

    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        Scalar::is_zero(self)
    }
}

/// Rational from a numerator/denominator pair. Panics on zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
