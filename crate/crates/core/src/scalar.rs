//! Scalar abstraction shared by the geometric code.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal is representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A relative tolerance that is never below the rounding noise of the type.
    #[inline]
    fn rel_tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(requested).max(floor)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let tau = T::two_pi();
    let mut r = theta % tau;
    if r < T::zero() {
        r = r + tau;
    }
    if r >= tau {
        r = r - tau;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        let tau = std::f64::consts::TAU;
        assert_eq!(wrap_angle(0.0f64), 0.0);
        assert!((wrap_angle(-0.5f64) - (tau - 0.5)).abs() < 1e-15);
        assert!((wrap_angle(7.0f64) - (7.0 - tau)).abs() < 1e-15);
        assert!(wrap_angle(tau) < tau);
        assert!(wrap_angle(-1e-20f64) < tau);
    }

    #[test]
    fn rel_tol_respects_type_precision() {
        assert_eq!(<f64 as Real>::rel_tol(1e-9), 1e-9);
        assert!(<f32 as Real>::rel_tol(1e-12) > 1e-12);
    }
}
