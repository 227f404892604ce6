use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point scalar the whole stack is generic over.
///
/// `f64` is the working precision for training, optimization, and gradient
/// checking; `f32` is the storage precision of feature files. Anything
/// satisfying these bounds works, but those two are the supported pair.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy cast from `f64` (constants, hyperparameters, RNG output).
    fn from_f64(v: f64) -> Self;

    /// Widening cast for reports and serialization.
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// Shorthand cast used all over the numeric code.
#[inline]
pub(crate) fn sc<S: Scalar>(v: f64) -> S {
    S::from_f64(v)
}
