//! Quantization tables and the quantize/dequantize steps.

use super::error::JpegError;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Zig-zag scan position → natural (row-major) index.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20,
    13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59,
    52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Example luminance table from Annex K of the JPEG standard, natural order.
pub const STD_LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Example chrominance table from Annex K, natural order.
pub const STD_CHROMA_QUANT: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Quantized DCT coefficients of one block, natural order; index 0 is DC.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct CoefficientBlock(pub [i16; 64]);

impl Default for CoefficientBlock {
    fn default() -> Self {
        Self([0; 64])
    }
}

impl std::fmt::Debug for CoefficientBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.chunks(8)).finish()
    }
}

impl CoefficientBlock {
    pub fn dc(&self) -> i16 {
        self.0[0]
    }
}

/// 64 divisors in natural order, each in `[1, 255]`.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u16>", into = "Vec<u16>")]
pub struct QuantTable([u16; 64]);

impl std::fmt::Debug for QuantTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.chunks(8)).finish()
    }
}

impl QuantTable {
    pub fn new(values: [u16; 64]) -> Result<Self, JpegError> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(1..=255).contains(*v))
        {
            return Err(JpegError::InvalidQuantTable(format!(
                "entry {i} is {v}, expected 1..=255"
            )));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[u16]) -> Result<Self, JpegError> {
        let arr: [u16; 64] = values.try_into().map_err(|_| {
            JpegError::InvalidQuantTable(format!("expected 64 entries, got {}", values.len()))
        })?;
        Self::new(arr)
    }

    /// All divisors 1: quantization only rounds.
    pub fn ones() -> Self {
        Self([1; 64])
    }

    pub fn std_luma() -> Self {
        Self(STD_LUMA_QUANT)
    }

    pub fn std_chroma() -> Self {
        Self(STD_CHROMA_QUANT)
    }

    /// Scale a base table with the IJG quality formula (1..=100).
    pub fn with_quality(base: &QuantTable, quality: u8) -> Self {
        let q = quality.clamp(1, 100) as u32;
        let scale = if q < 50 { 5000 / q } else { 200 - q * 2 };
        let mut out = [0u16; 64];
        for (o, b) in out.iter_mut().zip(base.0.iter()) {
            *o = ((*b as u32 * scale + 50) / 100).clamp(1, 255) as u16;
        }
        Self(out)
    }

    pub fn values(&self) -> &[u16; 64] {
        &self.0
    }

    pub fn max(&self) -> u16 {
        *self.0.iter().max().expect("non-empty")
    }

    /// Entries in zig-zag order, as stored in a DQT segment.
    pub fn zigzag(&self) -> [u16; 64] {
        let mut out = [0u16; 64];
        for (k, &n) in ZIGZAG.iter().enumerate() {
            out[k] = self.0[n];
        }
        out
    }

    pub fn from_zigzag(values: &[u16; 64]) -> Result<Self, JpegError> {
        let mut out = [0u16; 64];
        for (k, &n) in ZIGZAG.iter().enumerate() {
            out[n] = values[k];
        }
        Self::new(out)
    }
}

impl TryFrom<Vec<u16>> for QuantTable {
    type Error = JpegError;
    fn try_from(v: Vec<u16>) -> Result<Self, Self::Error> {
        Self::from_slice(&v)
    }
}

impl From<QuantTable> for Vec<u16> {
    fn from(t: QuantTable) -> Self {
        t.0.to_vec()
    }
}

/// Divide each coefficient by its divisor, rounding half away from zero.
pub fn quantize<T: Real>(coeffs: &[T; 64], table: &QuantTable) -> CoefficientBlock {
    let mut out = [0i16; 64];
    for ((o, c), q) in out.iter_mut().zip(coeffs).zip(table.0.iter()) {
        let v = (*c / T::from_int(*q as i32)).round_to_i32();
        *o = v.clamp(i16::MIN as i32, i16::MAX as i32) as i16;
    }
    CoefficientBlock(out)
}

/// Multiply each quantized coefficient by its divisor.
pub fn dequantize<T: Real>(coeffs: &CoefficientBlock, table: &QuantTable) -> [T; 64] {
    let mut out = [T::zero(); 64];
    for ((o, c), q) in out.iter_mut().zip(coeffs.0.iter()).zip(table.0.iter()) {
        *o = T::from_int(*c as i32 * *q as i32);
    }
    out
}
