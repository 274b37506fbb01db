use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point type the numerical core is written against.
///
/// Implemented for `f32` and `f64`. Everything outside the trainer is generic
/// over this trait; the trainer and CLI use `f64`.
pub trait Scalar:
    'static
    + Copy
    + Send
    + Sync
    + Default
    + Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + FromStr
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Total order for values already known to be non-NaN.
    #[inline]
    fn cmp_finite(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
