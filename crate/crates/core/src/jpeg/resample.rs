//! Bilinear rescaling of RGB rasters.

use super::error::JpegError;
use super::planes::RasterImage;

/// Scale to exactly `width`×`height` with bilinear interpolation on
/// pixel centres.
pub fn resize_bilinear(
    image: &RasterImage,
    width: usize,
    height: usize,
) -> Result<RasterImage, JpegError> {
    if width == image.width() && height == image.height() {
        return Ok(image.clone());
    }
    let (sw, sh) = (image.width(), image.height());
    let src = image.as_bytes();
    let sx = sw as f32 / width as f32;
    let sy = sh as f32 / height as f32;
    // precompute horizontal taps
    let taps: Vec<(usize, usize, f32)> = (0..width)
        .map(|x| {
            let fx = ((x as f32 + 0.5) * sx - 0.5).max(0.0);
            let x0 = (fx as usize).min(sw - 1);
            let x1 = (x0 + 1).min(sw - 1);
            (x0, x1, fx - x0 as f32)
        })
        .collect();
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        let fy = ((y as f32 + 0.5) * sy - 0.5).max(0.0);
        let y0 = (fy as usize).min(sh - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let wy = fy - y0 as f32;
        let r0 = &src[y0 * sw * 3..];
        let r1 = &src[y1 * sw * 3..];
        for &(x0, x1, wx) in &taps {
            for c in 0..3 {
                let top = r0[x0 * 3 + c] as f32 * (1.0 - wx) + r0[x1 * 3 + c] as f32 * wx;
                let bot = r1[x0 * 3 + c] as f32 * (1.0 - wx) + r1[x1 * 3 + c] as f32 * wx;
                data.push(
                    (top * (1.0 - wy) + bot * wy + 0.5)
                        .floor()
                        .clamp(0.0, 255.0) as u8,
                );
            }
        }
    }
    RasterImage::new(width, height, data)
}

/// Largest size with the same aspect ratio that fits in `max_w`×`max_h`.
/// Images that already fit are left alone.
pub fn fit_within(width: usize, height: usize, max_w: usize, max_h: usize) -> (usize, usize) {
    if width <= max_w && height <= max_h {
        return (width, height);
    }
    let scale = (max_w as f64 / width as f64).min(max_h as f64 / height as f64);
    let w = ((width as f64 * scale).round() as usize).clamp(8, max_w);
    let h = ((height as f64 * scale).round() as usize).clamp(8, max_h);
    (w, h)
}
