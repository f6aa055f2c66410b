//! Scalar abstraction for the core numerics.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar the solver is generic over: `f32` or `f64`.
pub trait FloatNum:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + Sum<Self>
    + ScalarOperand
    + LinalgScalar
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64` itself.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Widening conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl FloatNum for f32 {
    fn to_f64_lossy(self) -> f64 {
        f64::from(self)
    }
}

impl FloatNum for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
