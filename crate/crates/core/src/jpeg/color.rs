//! JFIF colour conversion between RGB and YCbCr.

use crate::scalar::Real;

/// Unrounded JFIF forward conversion.
#[inline]
pub fn rgb_to_ycbcr_real<T: Real>(r: T, g: T, b: T) -> [T; 3] {
    let c128 = T::lit(128.0);
    let y = T::lit(0.299) * r + T::lit(0.587) * g + T::lit(0.114) * b;
    let cb = T::lit(-0.168_736) * r - T::lit(0.331_264) * g + T::lit(0.5) * b + c128;
    let cr = T::lit(0.5) * r - T::lit(0.418_688) * g - T::lit(0.081_312) * b + c128;
    [y, cb, cr]
}

/// Unrounded JFIF inverse conversion.
#[inline]
pub fn ycbcr_to_rgb_real<T: Real>(y: T, cb: T, cr: T) -> [T; 3] {
    let c128 = T::lit(128.0);
    let cb = cb - c128;
    let cr = cr - c128;
    let r = y + T::lit(1.402) * cr;
    let g = y - T::lit(0.344_136) * cb - T::lit(0.714_136) * cr;
    let b = y + T::lit(1.772) * cb;
    [r, g, b]
}

// The JFIF coefficients are exact at six decimal places, so the byte API
// works in integers scaled by 10^6 and rounds ties up without float noise.
const SCALE: i64 = 1_000_000;
const HALF: i64 = SCALE / 2;

#[inline]
fn descale_u8(v: i64) -> u8 {
    (v + HALF).div_euclid(SCALE).clamp(0, 255) as u8
}

/// RGB to YCbCr with round-half-up and clamping to `[0, 255]`.
#[inline]
pub fn rgb_to_ycbcr(rgb: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = rgb.map(|c| c as i64);
    [
        descale_u8(299_000 * r + 587_000 * g + 114_000 * b),
        descale_u8(-168_736 * r - 331_264 * g + 500_000 * b + 128 * SCALE),
        descale_u8(500_000 * r - 418_688 * g - 81_312 * b + 128 * SCALE),
    ]
}

/// YCbCr to RGB with round-half-up and clamping to `[0, 255]`.
#[inline]
pub fn ycbcr_to_rgb(ycc: [u8; 3]) -> [u8; 3] {
    let y = ycc[0] as i64 * SCALE;
    let cb = ycc[1] as i64 - 128;
    let cr = ycc[2] as i64 - 128;
    [
        descale_u8(y + 1_402_000 * cr),
        descale_u8(y - 344_136 * cb - 714_136 * cr),
        descale_u8(y + 1_772_000 * cb),
    ]
}

/// Luma only; cheaper than a full conversion when chroma is not needed.
#[inline]
pub fn rgb_to_luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(|c| c as i64);
    descale_u8(299_000 * r + 587_000 * g + 114_000 * b)
}
