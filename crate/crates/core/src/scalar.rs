//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the toolkit computes with. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Default
    + Display
    + LowerExp
    + Debug
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `2^level` as a scalar.
    #[inline]
    fn pow2(level: i32) -> Self {
        Self::lit(2.0).powi(level)
    }

    /// A tolerance of `t`, raised to a small multiple of machine epsilon when
    /// the scalar cannot resolve `t`.
    #[inline]
    fn tol(t: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(t).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Normalised sinc, `sin(pi x) / (pi x)`.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-8) {
        let px = T::PI() * x;
        T::one() - px * px / T::lit(6.0)
    } else {
        (T::PI() * x).sin() / (T::PI() * x)
    }
}

/// Unnormalised `sin(x) / x`.
pub fn sin_over<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-6) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}
