//! Embedding geometry and capacity arithmetic.

use super::StegoError;
use crate::ecc::{K, N};

/// Rows at the top of a cover reserved for the visible banner.
pub const BANNER_ROWS: usize = 70;
/// Payload bits carried by one luminance sample.
pub const BITS_PER_SAMPLE: usize = 2;

/// Where in a cover the symbols go.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EmbedRegion {
    pub width: usize,
    pub height: usize,
    pub banner_rows: usize,
}

impl EmbedRegion {
    pub fn new(width: usize, height: usize, banner_rows: usize) -> Result<Self, StegoError> {
        if width < 8 || height < 8 || banner_rows >= height {
            return Err(StegoError::InvalidRegion {
                width,
                height,
                banner_rows,
            });
        }
        Ok(Self {
            width,
            height,
            banner_rows,
        })
    }

    /// Region with the standard banner strip.
    pub fn standard(width: usize, height: usize) -> Result<Self, StegoError> {
        Self::new(width, height, BANNER_ROWS)
    }

    pub fn usable_pixels(&self) -> usize {
        self.width * (self.height - self.banner_rows)
    }

    pub fn capacity(&self) -> Capacity {
        Capacity::for_pixels(self.usable_pixels())
    }

    /// Sample index of pixel `(x, y)`, if it lies in the usable region.
    #[inline]
    pub fn sample_index(&self, x: usize, y: usize) -> Option<usize> {
        if x < self.width && y >= self.banner_rows && y < self.height {
            Some((y - self.banner_rows) * self.width + x)
        } else {
            None
        }
    }
}

/// Embedding budget of a cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Capacity {
    pub usable_pixels: usize,
    pub raw_bits: usize,
    pub raw_bytes: usize,
    /// `raw_bytes` scaled by the code rate 191/255, rounded down.
    pub payload_bytes_after_ecc: usize,
}

impl Capacity {
    fn for_pixels(usable_pixels: usize) -> Self {
        let raw_bits = usable_pixels * BITS_PER_SAMPLE;
        let raw_bytes = raw_bits / 8;
        Self {
            usable_pixels,
            raw_bits,
            raw_bytes,
            payload_bytes_after_ecc: raw_bytes * K / N,
        }
    }

    /// Whole RS codewords that fit.
    pub fn codewords(&self) -> usize {
        self.raw_bytes / N
    }

    /// Data bytes carried by whole codewords; the unit the bit stream uses.
    pub fn codeword_payload_bytes(&self) -> usize {
        self.codewords() * K
    }

    /// Largest framed message (envelope) the bit stream can carry.
    pub fn max_message_bytes(&self) -> usize {
        self.codeword_payload_bytes()
            .saturating_sub(super::bits::FRAME_PREFIX_LEN)
    }

    /// The rounded three-quarters rate some published tables use.
    pub fn three_quarter_rate_bytes(&self) -> f64 {
        self.raw_bytes as f64 * 0.75
    }
}

/// Capacity of a `width`×`height` cover with `banner_rows` reserved rows.
/// Fails when not even one codeword fits.
pub fn compute_capacity(
    width: usize,
    height: usize,
    banner_rows: usize,
) -> Result<Capacity, StegoError> {
    let cap = EmbedRegion::new(width, height, banner_rows)?.capacity();
    if cap.codewords() == 0 {
        return Err(StegoError::Capacity {
            needed: N,
            available: cap.raw_bytes,
        });
    }
    Ok(cap)
}
