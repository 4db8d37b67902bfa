//! Scalar abstraction shared by every module.
//!
//! All geometry is written against [`Real`], implemented for `f32`, `f64` and
//! [`DoubleDouble`](crate::DoubleDouble). The tolerances quoted throughout the
//! crate assume at least `f64`; `f32` is supported for the closed-form pieces
//! (model, families) where single precision is meaningful.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert!((c::<f32>(std::f64::consts::PI) - std::f32::consts::PI).abs() < 1e-6);
    }
}
