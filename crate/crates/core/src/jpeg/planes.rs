//! Pixel containers, chroma resampling and 8×8 block access.

use super::color::{rgb_to_ycbcr, ycbcr_to_rgb};
use super::error::JpegError;

/// Smallest accepted image edge, one block.
pub const MIN_DIMENSION: usize = 8;

/// 8×8 block of unsigned samples in row-major order.
pub type SampleBlock = [u8; 64];

/// Interleaved 8-bit RGB raster, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, JpegError> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(JpegError::InvalidDimensions { width, height });
        }
        if data.len() != width * height * 3 {
            return Err(JpegError::InvalidBuffer {
                expected: width * height * 3,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, JpegError> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, JpegError> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Largest per-component absolute difference between two same-sized images.
    pub fn max_abs_diff(&self, other: &RasterImage) -> Option<u8> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap_or(0),
        )
    }

    /// Peak signal-to-noise ratio in dB over all components.
    pub fn psnr(&self, other: &RasterImage) -> Option<f64> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        let sse: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let d = *a as f64 - *b as f64;
                d * d
            })
            .sum();
        if sse == 0.0 {
            return Some(f64::INFINITY);
        }
        let mse = sse / self.data.len() as f64;
        Some(10.0 * (255.0f64 * 255.0 / mse).log10())
    }
}

/// A single 8-bit sample plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Block at block coordinates `(bx, by)`, replicating the last row and
    /// column for samples that fall outside the plane.
    pub fn block(&self, bx: usize, by: usize) -> SampleBlock {
        let mut out = [0u8; 64];
        let x0 = bx * 8;
        let y0 = by * 8;
        let last_x = self.width - 1;
        let last_y = self.height - 1;
        if x0 + 8 <= self.width && y0 + 8 <= self.height {
            for r in 0..8 {
                let src = (y0 + r) * self.width + x0;
                out[r * 8..r * 8 + 8].copy_from_slice(&self.data[src..src + 8]);
            }
            return out;
        }
        for r in 0..8 {
            let sy = (y0 + r).min(last_y);
            for c in 0..8 {
                let sx = (x0 + c).min(last_x);
                out[r * 8 + c] = self.data[sy * self.width + sx];
            }
        }
        out
    }

    /// Write the in-bounds part of a block back into the plane.
    pub fn put_block(&mut self, bx: usize, by: usize, block: &SampleBlock) {
        let x0 = bx * 8;
        let y0 = by * 8;
        if x0 >= self.width || y0 >= self.height {
            return;
        }
        let w = (self.width - x0).min(8);
        let h = (self.height - y0).min(8);
        for r in 0..h {
            let dst = (y0 + r) * self.width + x0;
            self.data[dst..dst + w].copy_from_slice(&block[r * 8..r * 8 + w]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsampling {
    /// 4:4:4, chroma at full resolution.
    #[default]
    None,
    /// 4:2:0, chroma halved in both directions.
    Chroma420,
}

impl Subsampling {
    /// Luma sampling factors `(h, v)` in the frame header.
    pub fn luma_factors(self) -> (u8, u8) {
        match self {
            Subsampling::None => (1, 1),
            Subsampling::Chroma420 => (2, 2),
        }
    }
}

/// Separated luminance and chrominance planes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YcbcrPlanes {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
    pub subsampling: Subsampling,
}

impl YcbcrPlanes {
    pub fn from_rgb(image: &RasterImage, subsampling: Subsampling) -> Self {
        let (w, h) = (image.width(), image.height());
        let mut y = Plane::new(w, h, 0);
        let mut cb = Plane::new(w, h, 0);
        let mut cr = Plane::new(w, h, 0);
        for (i, px) in image.as_bytes().chunks_exact(3).enumerate() {
            let [l, b, r] = rgb_to_ycbcr([px[0], px[1], px[2]]);
            y.data[i] = l;
            cb.data[i] = b;
            cr.data[i] = r;
        }
        let (cb, cr) = match subsampling {
            Subsampling::None => (cb, cr),
            Subsampling::Chroma420 => (subsample_420(&cb), subsample_420(&cr)),
        };
        Self {
            y,
            cb,
            cr,
            subsampling,
        }
    }

    /// Convert back to RGB; subsampled chroma is replicated.
    pub fn to_rgb(&self) -> Result<RasterImage, JpegError> {
        let (w, h) = (self.y.width, self.y.height);
        let mut data = Vec::with_capacity(w * h * 3);
        for yy in 0..h {
            for xx in 0..w {
                let (cx, cy) = match self.subsampling {
                    Subsampling::None => (xx, yy),
                    Subsampling::Chroma420 => (xx / 2, yy / 2),
                };
                let rgb =
                    ycbcr_to_rgb([self.y.get(xx, yy), self.cb.get(cx, cy), self.cr.get(cx, cy)]);
                data.extend_from_slice(&rgb);
            }
        }
        RasterImage::new(w, h, data)
    }
}

/// Halve a plane in both directions; each output sample is the rounded mean
/// of its 2×2 source window, using only the samples that exist at the edges.
pub fn subsample_420(plane: &Plane) -> Plane {
    let ow = plane.width.div_ceil(2);
    let oh = plane.height.div_ceil(2);
    let mut out = Plane::new(ow, oh, 0);
    for oy in 0..oh {
        for ox in 0..ow {
            let mut sum = 0u32;
            let mut n = 0u32;
            for sy in (oy * 2)..(oy * 2 + 2).min(plane.height) {
                for sx in (ox * 2)..(ox * 2 + 2).min(plane.width) {
                    sum += plane.get(sx, sy) as u32;
                    n += 1;
                }
            }
            out.set(ox, oy, ((sum + n / 2) / n) as u8);
        }
    }
    out
}

/// Triangle-filter ("fancy") upsampling by two horizontally.
/// `valid_width` is the component's true width inside the padded `row`.
pub(crate) fn upsample_row_h2(row: &[u8], valid_width: usize, out: &mut [u8]) {
    if valid_width == 1 {
        out[0] = row[0];
        out[1] = row[0];
        return;
    }
    out[0] = row[0];
    out[1] = ((row[0] as u32 * 3 + row[1] as u32 + 2) >> 2) as u8;
    // Alternating biases keep the filter's rounding error unbiased, as libjpeg does.
    for i in 1..valid_width - 1 {
        let s = 3 * row[i] as u32;
        out[i * 2] = ((s + row[i - 1] as u32 + 1) >> 2) as u8;
        out[i * 2 + 1] = ((s + row[i + 1] as u32 + 2) >> 2) as u8;
    }
    let l = valid_width - 1;
    out[l * 2] = ((row[l] as u32 * 3 + row[l - 1] as u32 + 1) >> 2) as u8;
    out[l * 2 + 1] = row[l];
}

/// Triangle-filter upsampling by two in both directions for output row `row`.
pub(crate) fn upsample_row_h2v2(
    plane: &Plane,
    valid_width: usize,
    valid_height: usize,
    row: usize,
    out: &mut [u8],
) {
    let near = row / 2;
    let far = if row.is_multiple_of(2) {
        near.saturating_sub(1)
    } else {
        (near + 1).min(valid_height - 1)
    };
    let near_row = &plane.data[near * plane.width..];
    let far_row = &plane.data[far * plane.width..];
    if valid_width == 1 {
        let v = ((3 * near_row[0] as u32 + far_row[0] as u32 + 2) >> 2) as u8;
        out[0] = v;
        out[1] = v;
        return;
    }
    let mut t1 = 3 * near_row[0] as u32 + far_row[0] as u32;
    out[0] = ((t1 + 2) >> 2) as u8;
    for i in 1..valid_width {
        let t0 = t1;
        t1 = 3 * near_row[i] as u32 + far_row[i] as u32;
        out[i * 2 - 1] = ((3 * t0 + t1 + 7) >> 4) as u8;
        out[i * 2] = ((3 * t1 + t0 + 8) >> 4) as u8;
    }
    out[valid_width * 2 - 1] = ((4 * t1 + 7) >> 4) as u8;
}

/// Triangle-filter upsampling by two vertically.
pub(crate) fn upsample_row_v2(
    plane: &Plane,
    valid_width: usize,
    valid_height: usize,
    row: usize,
    out: &mut [u8],
) {
    let near = row / 2;
    let far = if row.is_multiple_of(2) {
        near.saturating_sub(1)
    } else {
        (near + 1).min(valid_height - 1)
    };
    let near_row = &plane.data[near * plane.width..];
    let far_row = &plane.data[far * plane.width..];
    for i in 0..valid_width {
        out[i] = ((3 * near_row[i] as u32 + far_row[i] as u32 + 2) >> 2) as u8;
    }
}

/// Subtract 128 from every sample.
#[inline]
pub fn level_shift(block: &SampleBlock) -> [i16; 64] {
    let mut out = [0i16; 64];
    for (o, s) in out.iter_mut().zip(block) {
        *o = *s as i16 - 128;
    }
    out
}

/// Add 128 back and clamp into `[0, 255]`.
#[inline]
pub fn level_unshift(values: &[i16; 64]) -> SampleBlock {
    let mut out = [0u8; 64];
    for (o, v) in out.iter_mut().zip(values) {
        *o = (*v as i32 + 128).clamp(0, 255) as u8;
    }
    out
}
