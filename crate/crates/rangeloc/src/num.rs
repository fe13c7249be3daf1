//! Scalar abstraction: the library is generic over the floating-point type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar the library operates on: `f32` or `f64`.
pub trait Real: Float + FloatConst + NumAssign + Sum + Debug + Display + 'static {
    /// Lossy conversion from `f64`, for constants and RNG draws.
    fn from_f64(x: f64) -> Self;

    /// Lossy conversion to `f64`, for reporting.
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut x = a % two_pi;
    if x <= -T::PI() {
        x += two_pi;
    } else if x > T::PI() {
        x -= two_pi;
    }
    x
}
