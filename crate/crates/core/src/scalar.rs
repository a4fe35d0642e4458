//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, Signed};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable by the solvers: `f32` or `f64`.
///
/// Tolerances throughout the crate are written for double precision. They
/// pass through [`Real::tol`], which never lets a threshold drop below a
/// small multiple of the type's machine epsilon, so single-precision callers
/// get thresholds the arithmetic can actually meet.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Signed
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + rustfft::FftNum
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an index or count into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Double-precision tolerance `x`, floored at `8 * epsilon` of `Self`.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::of(8.0);
        Self::of(x).max(floor)
    }

    /// Accuracy target `x` for a computed result, floored at `1024 * epsilon`
    /// so that single precision gets a reachable bound.
    #[inline]
    fn accuracy(x: f64) -> Self {
        let floor = Self::epsilon() * Self::of(1024.0);
        Self::of(x).max(floor)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let tau = T::two_pi();
    let r = x % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// Circular distance `min(|a-b|, 2π-|a-b|)` between two angles.
pub fn circular_distance<T: Real>(a: T, b: T) -> T {
    let d = wrap_angle(a - b);
    d.min(T::two_pi() - d)
}
