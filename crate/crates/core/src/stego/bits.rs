//! Two-bit luminance symbols, payload framing and the raster embedder.

use super::capacity::EmbedRegion;
use super::StegoError;
use crate::ecc::{rs_correct, rs_encode_stream, StreamReport, K, N};
use crate::jpeg::{
    rgb_to_ycbcr, ycbcr_to_rgb, BlockPos, HookError, Plane, RasterImage, SampleBlock,
};

/// Magic at the start of the framed bit stream.
pub const BIT_MAGIC: [u8; 4] = *b"EPHB";
/// Magic plus a big-endian u32 length.
pub const FRAME_PREFIX_LEN: usize = 8;
/// Sample value carrying the `00` symbol; also the padding sample.
pub const PAD_SAMPLE: u8 = 32;

/// Two bits in the top of a sample, guard bit set, low bits clear.
#[inline]
pub fn encode_symbol(bits: u8) -> u8 {
    debug_assert!(bits < 4);
    ((bits & 3) << 6) | 0b0010_0000
}

#[inline]
pub fn decode_symbol(sample: u8) -> u8 {
    sample >> 6
}

/// Expand bytes into samples, four per byte, most significant pair first.
/// The output is padded with `00` symbols to `len` samples.
pub fn bytes_to_samples(bytes: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    for &b in bytes {
        for shift in [6, 4, 2, 0] {
            out.push(encode_symbol((b >> shift) & 3));
        }
    }
    out.truncate(len);
    out.resize(len, PAD_SAMPLE);
    out
}

/// Collapse samples back into bytes; a trailing partial byte is dropped.
pub fn samples_to_bytes(samples: &[u8]) -> Vec<u8> {
    samples
        .chunks_exact(4)
        .map(|q| q.iter().fold(0u8, |acc, &s| (acc << 2) | decode_symbol(s)))
        .collect()
}

/// Prefix the message with magic and length, then RS-encode.
pub fn frame_payload(message: &[u8], region: &EmbedRegion) -> Result<Vec<u8>, StegoError> {
    let cap = region.capacity();
    if message.len() > cap.max_message_bytes() || message.len() > u32::MAX as usize {
        return Err(StegoError::Capacity {
            needed: message.len(),
            available: cap.max_message_bytes(),
        });
    }
    let mut framed = Vec::with_capacity(FRAME_PREFIX_LEN + message.len());
    framed.extend_from_slice(&BIT_MAGIC);
    framed.extend_from_slice(&(message.len() as u32).to_be_bytes());
    framed.extend_from_slice(message);
    Ok(rs_encode_stream(&framed))
}

/// Read the prefix from the first codeword. Returns the message length and
/// the corrected first codeword's data.
fn read_prefix(coded: &[u8], region: &EmbedRegion) -> Result<(usize, [u8; N], usize), StegoError> {
    let first: [u8; N] = coded
        .get(..N)
        .ok_or(StegoError::NotProtected)?
        .try_into()
        .expect("slice of N");
    let mut cw = first;
    let corrected = rs_correct(&mut cw).map_err(|_| StegoError::NotProtected)?;
    if cw[..4] != BIT_MAGIC {
        return Err(StegoError::NotProtected);
    }
    let len = u32::from_be_bytes(cw[4..8].try_into().unwrap()) as usize;
    if len > region.capacity().max_message_bytes() {
        return Err(StegoError::NotProtected);
    }
    Ok((len, cw, corrected))
}

/// True when the first codeword decodes to a valid prefix.
pub fn has_bit_prefix(coded: &[u8], region: &EmbedRegion) -> bool {
    read_prefix(coded, region).is_ok()
}

/// Undo [`frame_payload`] on extracted bytes.
pub fn unframe_payload(
    coded: &[u8],
    region: &EmbedRegion,
) -> Result<(Vec<u8>, StreamReport), StegoError> {
    let (len, first, corrected) = read_prefix(coded, region)?;
    let total = (FRAME_PREFIX_LEN + len).div_ceil(K);
    if coded.len() < total * N {
        return Err(StegoError::NotProtected);
    }
    let mut data = Vec::with_capacity(total * K);
    data.extend_from_slice(&first[..K]);
    let mut report = StreamReport {
        corrected: vec![corrected],
    };
    for i in 1..total {
        let mut cw: [u8; N] = coded[i * N..(i + 1) * N].try_into().unwrap();
        let n = rs_correct(&mut cw).map_err(|_| StegoError::Corrupted { codeword: i })?;
        report.corrected.push(n);
        data.extend_from_slice(&cw[..K]);
    }
    data.truncate(FRAME_PREFIX_LEN + len);
    data.drain(..FRAME_PREFIX_LEN);
    Ok((data, report))
}

/// Samples to write into the usable region for already-coded bytes.
pub fn region_samples(coded: &[u8], region: &EmbedRegion) -> Result<Vec<u8>, StegoError> {
    let raw = region.capacity().raw_bytes;
    if coded.len() > raw {
        return Err(StegoError::Capacity {
            needed: coded.len(),
            available: raw,
        });
    }
    Ok(bytes_to_samples(coded, region.usable_pixels()))
}

fn check_dims(width: usize, height: usize, region: &EmbedRegion) -> Result<(), StegoError> {
    if width != region.width || height != region.height {
        return Err(StegoError::DimensionMismatch {
            expected: (region.width, region.height),
            actual: (width, height),
        });
    }
    Ok(())
}

/// Replace the luminance of the usable region with symbol samples. Chroma
/// and the banner strip are kept.
pub fn embed_bits(
    cover: &RasterImage,
    coded: &[u8],
    region: &EmbedRegion,
) -> Result<RasterImage, StegoError> {
    check_dims(cover.width(), cover.height(), region)?;
    let samples = region_samples(coded, region)?;
    let mut out = cover.clone();
    let w = region.width;
    for (i, &s) in samples.iter().enumerate() {
        let (x, y) = (i % w, region.banner_rows + i / w);
        let [_, cb, cr] = rgb_to_ycbcr(cover.pixel(x, y));
        out.set_pixel(x, y, ycbcr_to_rgb([s, cb, cr]));
    }
    Ok(out)
}

/// Read the symbol bytes back from an RGB raster.
pub fn extract_bits(image: &RasterImage, region: &EmbedRegion) -> Result<Vec<u8>, StegoError> {
    check_dims(image.width(), image.height(), region)?;
    let samples: Vec<u8> = image.as_bytes()[region.banner_rows * region.width * 3..]
        .chunks_exact(3)
        .map(|p| rgb_to_ycbcr([p[0], p[1], p[2]])[0])
        .collect();
    Ok(samples_to_bytes(&samples))
}

/// Read the symbol bytes from a decoded luminance plane.
pub fn extract_bits_from_luma(luma: &Plane, region: &EmbedRegion) -> Result<Vec<u8>, StegoError> {
    check_dims(luma.width, luma.height, region)?;
    Ok(samples_to_bytes(
        &luma.data[region.banner_rows * region.width..],
    ))
}

/// Build a pre-DCT hook that writes `samples` into the usable region.
pub fn symbol_writer<'a>(
    samples: &'a [u8],
    region: EmbedRegion,
) -> impl FnMut(BlockPos, &mut SampleBlock) -> Result<(), HookError> + 'a {
    move |pos, block| {
        let y0 = pos.by * 8;
        if y0 + 8 <= region.banner_rows {
            return Ok(());
        }
        for r in 0..8 {
            let y = y0 + r;
            if y < region.banner_rows || y >= region.height {
                continue;
            }
            let row = (y - region.banner_rows) * region.width;
            for c in 0..8 {
                let x = pos.bx * 8 + c;
                if x < region.width {
                    block[r * 8 + c] = samples[row + x];
                }
            }
        }
        Ok(())
    }
}
