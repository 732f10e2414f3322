//! Codec, embedding, error correction and crypto primitives for
//! self-expiring images.

pub mod crypto;
pub mod ecc;
pub mod jpeg;
pub mod recompress;
pub mod scalar;
pub mod stego;

pub use scalar::Real;

/// Single-precision cosine transform.
pub type Dct32 = jpeg::DctPlan<f32>;
/// Double-precision cosine transform.
pub type Dct64 = jpeg::DctPlan<f64>;
