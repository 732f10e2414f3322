//! Baseline Huffman entropy coding of quantized blocks: DC difference
//! coding, zig-zag run-length coding of AC terms, restart intervals.

use super::bits::{BitReader, BitWriter};
use super::error::JpegError;
use super::huffman::{HuffmanDecoder, HuffmanEncoder, HuffmanSpec};
use super::quant::{CoefficientBlock, ZIGZAG};

/// Largest DC difference magnitude category in baseline mode.
const MAX_DC_SIZE: u8 = 11;
/// Largest AC magnitude category in baseline mode.
const MAX_AC_SIZE: u8 = 10;

/// Coefficients of one component on its coded block grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentGrid {
    pub blocks_w: usize,
    pub blocks_h: usize,
    pub blocks: Vec<CoefficientBlock>,
}

impl ComponentGrid {
    pub fn new(blocks_w: usize, blocks_h: usize) -> Self {
        Self {
            blocks_w,
            blocks_h,
            blocks: vec![CoefficientBlock::default(); blocks_w * blocks_h],
        }
    }

    #[inline]
    pub fn at(&self, bx: usize, by: usize) -> &CoefficientBlock {
        &self.blocks[by * self.blocks_w + bx]
    }

    #[inline]
    pub fn at_mut(&mut self, bx: usize, by: usize) -> &mut CoefficientBlock {
        &mut self.blocks[by * self.blocks_w + bx]
    }
}

/// Number of bits needed for `|v|`.
#[inline]
fn magnitude_size(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

#[inline]
fn magnitude_bits(v: i32, size: u8) -> u32 {
    let v = if v < 0 { v - 1 } else { v };
    (v as u32) & ((1u32 << size) - 1)
}

fn encode_block(
    w: &mut BitWriter,
    block: &CoefficientBlock,
    pred: &mut i32,
    dc: &HuffmanEncoder,
    ac: &HuffmanEncoder,
) -> Result<(), JpegError> {
    let value = block.0[0] as i32;
    let diff = value - *pred;
    *pred = value;
    let size = magnitude_size(diff);
    if size > MAX_DC_SIZE {
        return Err(JpegError::CoefficientOutOfRange { value: diff });
    }
    w.write_code_with(dc, size, magnitude_bits(diff, size), size)?;

    // walk the nonzero AC terms in zig-zag order via a bit mask
    let mut zz = [0i32; 64];
    let mut nonzero = 0u64;
    for k in 1..64 {
        let v = block.0[ZIGZAG[k]] as i32;
        zz[k] = v;
        nonzero |= ((v != 0) as u64) << k;
    }
    let mut last = 0usize;
    while nonzero != 0 {
        let k = nonzero.trailing_zeros() as usize;
        nonzero &= nonzero - 1;
        let mut run = k - last - 1;
        while run > 15 {
            w.write_code(ac, 0xF0)?;
            run -= 16;
        }
        let v = zz[k];
        let size = magnitude_size(v);
        if size > MAX_AC_SIZE {
            return Err(JpegError::CoefficientOutOfRange { value: v });
        }
        w.write_code_with(ac, ((run as u8) << 4) | size, magnitude_bits(v, size), size)?;
        last = k;
    }
    if last != 63 {
        w.write_code(ac, 0x00)?;
    }
    Ok(())
}

fn decode_block(
    r: &mut BitReader<'_>,
    block: &mut CoefficientBlock,
    pred: &mut i32,
    dc: &HuffmanDecoder,
    ac: &HuffmanDecoder,
) -> Result<(), JpegError> {
    let size = r.decode(dc)?;
    if size > MAX_DC_SIZE {
        return Err(JpegError::Parse {
            offset: r.position(),
            reason: format!("DC magnitude category {size}"),
        });
    }
    *pred += r.receive_extend(size)?;
    block.0[0] = (*pred).clamp(i16::MIN as i32, i16::MAX as i32) as i16;
    let mut k = 1usize;
    while k < 64 {
        let rs = r.decode(ac)?;
        let run = (rs >> 4) as usize;
        let size = rs & 0x0F;
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run;
        if k > 63 {
            return Err(JpegError::Parse {
                offset: r.position(),
                reason: "AC run past end of block".into(),
            });
        }
        block.0[ZIGZAG[k]] = r.receive_extend(size)? as i16;
        k += 1;
    }
    if k > 64 {
        return Err(JpegError::Parse {
            offset: r.position(),
            reason: "zero run past end of block".into(),
        });
    }
    Ok(())
}

/// One component's participation in a scan.
pub(crate) struct ScanPart<'a, G, T> {
    pub grid: G,
    /// Blocks per MCU horizontally / vertically (1 × 1 for non-interleaved scans).
    pub h: usize,
    pub v: usize,
    pub dc: &'a T,
    pub ac: &'a T,
}

pub(crate) fn encode_scan(
    parts: &[ScanPart<'_, &ComponentGrid, HuffmanEncoder>],
    mcus_x: usize,
    mcus_y: usize,
    restart_interval: u16,
) -> Result<Vec<u8>, JpegError> {
    let estimate = parts.iter().map(|p| p.grid.blocks.len() * 24).sum();
    let mut w = BitWriter::with_capacity(estimate);
    let mut preds = vec![0i32; parts.len()];
    let mut restarts = 0u8;
    let total = mcus_x * mcus_y;
    for mcu in 0..total {
        if restart_interval > 0 && mcu > 0 && mcu % restart_interval as usize == 0 {
            w.restart(restarts);
            restarts = restarts.wrapping_add(1);
            preds.iter_mut().for_each(|p| *p = 0);
        }
        let (mx, my) = (mcu % mcus_x, mcu / mcus_x);
        for (part, pred) in parts.iter().zip(preds.iter_mut()) {
            for by in 0..part.v {
                for bx in 0..part.h {
                    let block = part.grid.at(mx * part.h + bx, my * part.v + by);
                    encode_block(&mut w, block, pred, part.dc, part.ac)?;
                }
            }
        }
    }
    Ok(w.into_bytes())
}

pub(crate) fn decode_scan(
    data: &[u8],
    parts: &mut [ScanPart<'_, &mut ComponentGrid, HuffmanDecoder>],
    mcus_x: usize,
    mcus_y: usize,
    restart_interval: u16,
) -> Result<(), JpegError> {
    let mut r = BitReader::new(data);
    let mut preds = vec![0i32; parts.len()];
    let total = mcus_x * mcus_y;
    for mcu in 0..total {
        if restart_interval > 0 && mcu > 0 && mcu % restart_interval as usize == 0 {
            r.restart()?;
            preds.iter_mut().for_each(|p| *p = 0);
        }
        let (mx, my) = (mcu % mcus_x, mcu / mcus_x);
        for (part, pred) in parts.iter_mut().zip(preds.iter_mut()) {
            for by in 0..part.v {
                for bx in 0..part.h {
                    let (gx, gy) = (mx * part.h + bx, my * part.v + by);
                    let block = part.grid.at_mut(gx, gy);
                    decode_block(&mut r, block, pred, part.dc, part.ac)?;
                }
            }
        }
    }
    Ok(())
}

/// Entropy-code a sequence of blocks belonging to one component.
pub fn entropy_encode(
    blocks: &[CoefficientBlock],
    dc: &HuffmanSpec,
    ac: &HuffmanSpec,
) -> Result<Vec<u8>, JpegError> {
    let grid = ComponentGrid {
        blocks_w: blocks.len().max(1),
        blocks_h: 1,
        blocks: blocks.to_vec(),
    };
    let (dc, ac) = (HuffmanEncoder::new(dc), HuffmanEncoder::new(ac));
    let part = ScanPart {
        grid: &grid,
        h: 1,
        v: 1,
        dc: &dc,
        ac: &ac,
    };
    encode_scan(&[part], blocks.len(), 1, 0)
}

/// Inverse of [`entropy_encode`] for `count` blocks.
pub fn entropy_decode(
    data: &[u8],
    count: usize,
    dc: &HuffmanSpec,
    ac: &HuffmanSpec,
) -> Result<Vec<CoefficientBlock>, JpegError> {
    let mut grid = ComponentGrid::new(count.max(1), 1);
    let (dc, ac) = (HuffmanDecoder::new(dc), HuffmanDecoder::new(ac));
    let mut parts = [ScanPart {
        grid: &mut grid,
        h: 1,
        v: 1,
        dc: &dc,
        ac: &ac,
    }];
    decode_scan(data, &mut parts, count, 1, 0)?;
    grid.blocks.truncate(count);
    Ok(grid.blocks)
}
