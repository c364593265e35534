//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    /// Tolerance floor: `max(target, factor * epsilon)`.
    #[inline]
    fn tol_floor(target: f64, factor: f64) -> Self {
        Self::lit(target).max(Self::epsilon() * Self::lit(factor))
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) mod vec3 {
    use super::Real;

    #[inline]
    pub fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[inline]
    pub fn norm_sq<T: Real>(a: &[T; 3]) -> T {
        dot(a, a)
    }

    #[inline]
    pub fn norm<T: Real>(a: &[T; 3]) -> T {
        norm_sq(a).sqrt()
    }

    #[inline]
    pub fn scale<T: Real>(a: &[T; 3], s: T) -> [T; 3] {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    #[inline]
    pub fn sub<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    #[inline]
    pub fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }
}
