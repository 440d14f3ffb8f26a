//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the solver is generic over: `f32` or `f64`.
///
/// Tolerances throughout the crate are written for `f64`. [`Scalar::tol`]
/// lifts them to a floor tied to the type's machine epsilon so the same
/// code stays meaningful in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Tolerance `base`, raised to a small multiple of machine epsilon when
    /// the type cannot resolve `base`.
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon().to_f64().unwrap_or(f64::EPSILON) * 64.0;
        Self::lit(base.max(floor))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
