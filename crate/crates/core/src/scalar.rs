//! Scalar abstraction for the transform and colour math.
//!
//! Everything in the codec that works on real numbers (colour conversion,
//! the cosine transform, real-valued quantization tables) is written against
//! [`Real`], with implementations for `f32` and `f64`. The entropy coder and
//! the quantized coefficient domain are integer-only and do not use it.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point type usable by the codec math.
pub trait Real:
    'static
    + Send
    + Sync
    + Copy
    + Default
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
{
    /// Lossless-enough conversion from `f64` constants.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable")
    }

    #[inline]
    fn from_int(value: i32) -> Self {
        Self::from_i32(value).expect("i32 representable")
    }

    /// Round half away from zero and saturate into `i32`.
    #[inline]
    fn round_to_i32(self) -> i32 {
        self.round().to_i32().unwrap_or(if self > Self::zero() {
            i32::MAX
        } else {
            i32::MIN
        })
    }

    /// Round half up (towards positive infinity) and clamp into `[0, 255]`.
    #[inline]
    fn round_half_up_u8(self) -> u8 {
        let v = (self + Self::lit(0.5)).floor();
        if v <= Self::zero() {
            0
        } else if v >= Self::lit(255.0) {
            255
        } else {
            v.to_u8().unwrap_or(0)
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
