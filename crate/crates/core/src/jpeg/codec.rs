//! Full baseline pipeline: RGB ⇄ YCbCr planes ⇄ quantized blocks ⇄ JFIF.

use super::color::ycbcr_to_rgb;
use super::dct::Arithmetic;
use super::entropy::{decode_scan, encode_scan, ComponentGrid, ScanPart};
use super::error::JpegError;
use super::huffman::{HuffmanDecoder, HuffmanEncoder, HuffmanSpec, HuffmanTables};
use super::jfif::{
    jfif_app0, parse_jfif, serialize_jfif, FrameComponent, FrameHeader, FrameKind, HuffmanTableDef,
    JfifImage, Scan, ScanComponentSpec, TableClass,
};
use super::planes::{
    level_shift, level_unshift, upsample_row_h2, upsample_row_h2v2, upsample_row_v2, Plane,
    RasterImage, SampleBlock, Subsampling, YcbcrPlanes,
};
use super::quant::QuantTable;

/// Block coordinates on the luminance block grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockPos {
    pub bx: usize,
    pub by: usize,
}

/// Error a hook can return to abort an encode.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct HookError(pub String);

pub type PreDctHook<'a> = dyn FnMut(BlockPos, &mut SampleBlock) -> Result<(), HookError> + 'a;
pub type PostIdctHook<'a> = dyn FnMut(BlockPos, &SampleBlock) + 'a;

/// Callbacks on spatial luminance blocks. Both run in raster block order over
/// the MCU-padded luminance grid; chroma blocks are never passed.
#[derive(Default)]
pub struct CodecHooks<'a> {
    /// Sees each block just before the forward DCT and may rewrite it.
    pub pre_dct: Option<&'a mut PreDctHook<'a>>,
    /// Sees each reconstructed block right after the inverse DCT.
    pub post_idct: Option<&'a mut PostIdctHook<'a>>,
}

impl<'a> CodecHooks<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn pre_dct(f: &'a mut PreDctHook<'a>) -> Self {
        Self {
            pre_dct: Some(f),
            post_idct: None,
        }
    }

    pub fn post_idct(f: &'a mut PostIdctHook<'a>) -> Self {
        Self {
            pre_dct: None,
            post_idct: Some(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeParams {
    pub luma_table: QuantTable,
    pub chroma_table: QuantTable,
    pub subsampling: Subsampling,
    pub huffman: HuffmanTables,
    pub arithmetic: Arithmetic,
    /// MCUs between restart markers, 0 for none.
    pub restart_interval: u16,
    pub comments: Vec<Vec<u8>>,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self::quality(75)
    }
}

impl EncodeParams {
    /// Standard example tables scaled to an IJG-style quality, 4:2:0.
    pub fn quality(q: u8) -> Self {
        Self::with_tables(
            QuantTable::with_quality(&QuantTable::std_luma(), q),
            QuantTable::with_quality(&QuantTable::std_chroma(), q),
            Subsampling::Chroma420,
        )
    }

    pub fn with_tables(luma: QuantTable, chroma: QuantTable, subsampling: Subsampling) -> Self {
        Self {
            luma_table: luma,
            chroma_table: chroma,
            subsampling,
            huffman: HuffmanTables::default(),
            arithmetic: Arithmetic::default(),
            restart_interval: 0,
            comments: Vec::new(),
        }
    }

    /// Unit quantization and full-resolution chroma.
    pub fn lossless_tables() -> Self {
        Self::with_tables(QuantTable::ones(), QuantTable::ones(), Subsampling::None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeOptions {
    pub arithmetic: Arithmetic,
}

/// Decoding defaults to the fixed-point IDCT, which reproduces the output of
/// common integer decoders sample for sample.
impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            arithmetic: Arithmetic::Integer,
        }
    }
}

/// Encode an RGB raster to a JFIF structure.
pub fn encode(
    image: &RasterImage,
    params: &EncodeParams,
    hooks: &mut CodecHooks<'_>,
) -> Result<JfifImage, JpegError> {
    let planes = YcbcrPlanes::from_rgb(image, params.subsampling);
    encode_planes(&planes, params, hooks)
}

/// Encode an RGB raster straight to bytes.
pub fn encode_to_bytes(image: &RasterImage, params: &EncodeParams) -> Result<Vec<u8>, JpegError> {
    serialize_jfif(&encode(image, params, &mut CodecHooks::none())?)
}

fn check_planes(planes: &YcbcrPlanes) -> Result<(), JpegError> {
    let (w, h) = (planes.y.width, planes.y.height);
    if w < 8 || h < 8 || w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(JpegError::InvalidDimensions {
            width: w,
            height: h,
        });
    }
    let (cw, ch) = match planes.subsampling {
        Subsampling::None => (w, h),
        Subsampling::Chroma420 => (w.div_ceil(2), h.div_ceil(2)),
    };
    for p in [&planes.cb, &planes.cr] {
        if p.width != cw || p.height != ch {
            return Err(JpegError::InvalidDimensions {
                width: p.width,
                height: p.height,
            });
        }
    }
    Ok(())
}

/// Encode already separated planes.
pub fn encode_planes(
    planes: &YcbcrPlanes,
    params: &EncodeParams,
    hooks: &mut CodecHooks<'_>,
) -> Result<JfifImage, JpegError> {
    check_planes(planes)?;
    let (w, h) = (planes.y.width, planes.y.height);
    let (lh, lv) = params.subsampling.luma_factors();
    let frame = FrameHeader {
        kind: FrameKind::Baseline,
        precision: 8,
        width: w as u16,
        height: h as u16,
        components: vec![
            FrameComponent {
                id: 1,
                h: lh,
                v: lv,
                quant_table: 0,
            },
            FrameComponent {
                id: 2,
                h: 1,
                v: 1,
                quant_table: 1,
            },
            FrameComponent {
                id: 3,
                h: 1,
                v: 1,
                quant_table: 1,
            },
        ],
    };
    let (mcus_x, mcus_y) = frame.mcus();
    let transform = params.arithmetic.transform();

    let (gw, gh) = frame.component_grid(0);
    let mut luma = ComponentGrid::new(gw, gh);
    for by in 0..gh {
        for bx in 0..gw {
            let mut block = planes.y.block(bx, by);
            if let Some(hook) = hooks.pre_dct.as_mut() {
                hook(BlockPos { bx, by }, &mut block).map_err(|e| JpegError::Hook(e.0))?;
            }
            *luma.at_mut(bx, by) =
                transform.forward_quantize(&level_shift(&block), &params.luma_table);
        }
    }
    let chroma = |plane: &Plane| {
        let mut grid = ComponentGrid::new(mcus_x, mcus_y);
        for by in 0..mcus_y {
            for bx in 0..mcus_x {
                *grid.at_mut(bx, by) = transform
                    .forward_quantize(&level_shift(&plane.block(bx, by)), &params.chroma_table);
            }
        }
        grid
    };
    let cb = chroma(&planes.cb);
    let cr = chroma(&planes.cr);

    let t = &params.huffman;
    let enc = [
        HuffmanEncoder::new(&t.dc_luma),
        HuffmanEncoder::new(&t.ac_luma),
        HuffmanEncoder::new(&t.dc_chroma),
        HuffmanEncoder::new(&t.ac_chroma),
    ];
    let parts = [
        ScanPart {
            grid: &luma,
            h: lh as usize,
            v: lv as usize,
            dc: &enc[0],
            ac: &enc[1],
        },
        ScanPart {
            grid: &cb,
            h: 1,
            v: 1,
            dc: &enc[2],
            ac: &enc[3],
        },
        ScanPart {
            grid: &cr,
            h: 1,
            v: 1,
            dc: &enc[2],
            ac: &enc[3],
        },
    ];
    let data = encode_scan(&parts, mcus_x, mcus_y, params.restart_interval)?;

    let def = |class, id, spec: &HuffmanSpec| HuffmanTableDef {
        class,
        id,
        spec: spec.clone(),
    };
    Ok(JfifImage {
        app_segments: vec![jfif_app0()],
        comments: params.comments.clone(),
        quant_tables: [
            Some(params.luma_table),
            Some(params.chroma_table),
            None,
            None,
        ],
        huffman_tables: vec![
            def(TableClass::Dc, 0, &t.dc_luma),
            def(TableClass::Ac, 0, &t.ac_luma),
            def(TableClass::Dc, 1, &t.dc_chroma),
            def(TableClass::Ac, 1, &t.ac_chroma),
        ],
        frame,
        restart_interval: params.restart_interval,
        scans: vec![Scan {
            tables: vec![],
            components: (1..=3)
                .map(|id| ScanComponentSpec {
                    id,
                    dc_table: (id > 1) as u8,
                    ac_table: (id > 1) as u8,
                })
                .collect(),
            spectral_start: 0,
            spectral_end: 63,
            approx: 0,
            data,
        }],
    })
}

/// Quantized coefficients of every component, on MCU-padded grids.
#[derive(Clone, Debug)]
pub struct DecodedCoefficients {
    pub grids: Vec<ComponentGrid>,
}

/// Entropy-decode every scan of `image`.
pub fn decode_coefficients(image: &JfifImage) -> Result<DecodedCoefficients, JpegError> {
    let frame = &image.frame;
    let mut grids: Vec<ComponentGrid> = (0..frame.components.len())
        .map(|i| {
            let (gw, gh) = frame.component_grid(i);
            ComponentGrid::new(gw, gh)
        })
        .collect();
    let mut dc_specs: [Option<HuffmanSpec>; 4] = Default::default();
    let mut ac_specs: [Option<HuffmanSpec>; 4] = Default::default();
    let install = |defs: &[HuffmanTableDef],
                   dc: &mut [Option<HuffmanSpec>; 4],
                   ac: &mut [Option<HuffmanSpec>; 4]| {
        for d in defs {
            let slot = match d.class {
                TableClass::Dc => &mut dc[d.id as usize],
                TableClass::Ac => &mut ac[d.id as usize],
            };
            *slot = Some(d.spec.clone());
        }
    };
    install(&image.huffman_tables, &mut dc_specs, &mut ac_specs);

    for scan in &image.scans {
        install(&scan.tables, &mut dc_specs, &mut ac_specs);
        if scan.spectral_start != 0 || scan.spectral_end != 63 || scan.approx != 0 {
            return Err(JpegError::UnsupportedMode("spectral selection".into()));
        }
        let mut indices = Vec::with_capacity(scan.components.len());
        let mut decoders = Vec::with_capacity(scan.components.len());
        for sc in &scan.components {
            let index = frame
                .components
                .iter()
                .position(|c| c.id == sc.id)
                .ok_or_else(|| {
                    JpegError::parse(0, format!("scan names unknown component {}", sc.id))
                })?;
            let get = |specs: &[Option<HuffmanSpec>; 4], id: u8, what: &str| {
                specs
                    .get(id as usize)
                    .and_then(|s| s.as_ref())
                    .map(HuffmanDecoder::new)
                    .ok_or_else(|| {
                        JpegError::parse(0, format!("missing {what} Huffman table {id}"))
                    })
            };
            decoders.push((
                get(&dc_specs, sc.dc_table, "DC")?,
                get(&ac_specs, sc.ac_table, "AC")?,
            ));
            indices.push(index);
        }
        let interleaved = indices.len() > 1;
        let (mcus_x, mcus_y) = if interleaved {
            frame.mcus()
        } else {
            let (cw, ch) = frame.component_size(indices[0]);
            (cw.div_ceil(8), ch.div_ceil(8))
        };
        // split the grid vector into disjoint mutable borrows in scan order
        let mut slots: Vec<Option<&mut ComponentGrid>> = grids.iter_mut().map(Some).collect();
        let mut parts = Vec::with_capacity(indices.len());
        for (&index, (dc, ac)) in indices.iter().zip(decoders.iter()) {
            let grid = slots[index]
                .take()
                .ok_or_else(|| JpegError::parse(0, "component repeated in scan"))?;
            let c = &frame.components[index];
            let (h, v) = if interleaved {
                (c.h as usize, c.v as usize)
            } else {
                (1, 1)
            };
            parts.push(ScanPart { grid, h, v, dc, ac });
        }
        decode_scan(
            &scan.data,
            &mut parts,
            mcus_x,
            mcus_y,
            image.restart_interval,
        )?;
    }
    Ok(DecodedCoefficients { grids })
}

/// Component planes at their native resolution.
#[derive(Clone, Debug)]
pub struct DecodedPlanes {
    pub width: usize,
    pub height: usize,
    pub frame: FrameHeader,
    pub planes: Vec<Plane>,
}

/// Decode to per-component sample planes, before upsampling and colour
/// conversion.
pub fn decode_planes(
    image: &JfifImage,
    options: DecodeOptions,
    hooks: &mut CodecHooks<'_>,
) -> Result<DecodedPlanes, JpegError> {
    let coeffs = decode_coefficients(image)?;
    let transform = options.arithmetic.transform();
    let frame = &image.frame;
    let mut planes = Vec::with_capacity(frame.components.len());
    for (index, grid) in coeffs.grids.iter().enumerate() {
        let table = image.component_quant(index).ok_or_else(|| {
            JpegError::parse(
                0,
                format!("missing quantization table for component {index}"),
            )
        })?;
        let (cw, ch) = frame.component_size(index);
        let mut plane = Plane::new(cw, ch, 0);
        let bw = cw.div_ceil(8);
        let bh = ch.div_ceil(8);
        let observe = index == 0 && hooks.post_idct.is_some();
        let (gw, gh) = if observe {
            (grid.blocks_w, grid.blocks_h)
        } else {
            (bw, bh)
        };
        for by in 0..gh {
            for bx in 0..gw {
                let samples = level_unshift(&transform.dequantize_inverse(grid.at(bx, by), table));
                if observe {
                    if let Some(hook) = hooks.post_idct.as_mut() {
                        hook(BlockPos { bx, by }, &samples);
                    }
                }
                plane.put_block(bx, by, &samples);
            }
        }
        planes.push(plane);
    }
    Ok(DecodedPlanes {
        width: frame.width as usize,
        height: frame.height as usize,
        frame: frame.clone(),
        planes,
    })
}

/// Decode only the luminance rows `rows` (block-granular work); samples
/// outside the band are left at zero.
pub fn decode_luma_rows(
    image: &JfifImage,
    rows: std::ops::Range<usize>,
    options: DecodeOptions,
) -> Result<Plane, JpegError> {
    let frame = &image.frame;
    let (cw, ch) = frame.component_size(0);
    if (cw, ch) != (frame.width as usize, frame.height as usize) {
        return Ok(decode_planes(image, options, &mut CodecHooks::none())?
            .planes
            .swap_remove(0));
    }
    let coeffs = decode_coefficients(image)?;
    let table = image
        .component_quant(0)
        .ok_or_else(|| JpegError::parse(0, "missing luminance quantization table"))?;
    let transform = options.arithmetic.transform();
    let mut plane = Plane::new(cw, ch, 0);
    let grid = &coeffs.grids[0];
    let first = rows.start / 8;
    let last = rows.end.min(ch).div_ceil(8);
    for by in first..last {
        for bx in 0..cw.div_ceil(8) {
            let samples = level_unshift(&transform.dequantize_inverse(grid.at(bx, by), table));
            plane.put_block(bx, by, &samples);
        }
    }
    Ok(plane)
}

/// Bring a chroma plane up to full resolution.
fn upsample(plane: &Plane, width: usize, height: usize, fx: usize, fy: usize) -> Plane {
    if fx == 1 && fy == 1 {
        return plane.clone();
    }
    let mut out = Plane::new(width, height, 0);
    let mut row = vec![0u8; (plane.width * fx).max(width)];
    let mut tmp = vec![0u8; plane.width];
    for y in 0..height {
        match (fx, fy) {
            (2, 2) => upsample_row_h2v2(plane, plane.width, plane.height, y, &mut row),
            (2, 1) => upsample_row_h2(
                &plane.data[y * plane.width..(y + 1) * plane.width],
                plane.width,
                &mut row,
            ),
            (1, 2) => {
                upsample_row_v2(plane, plane.width, plane.height, y, &mut tmp);
                row[..plane.width].copy_from_slice(&tmp);
            }
            _ => {
                let sy = (y / fy).min(plane.height - 1);
                for (x, r) in row.iter_mut().enumerate().take(width) {
                    *r = plane.get((x / fx).min(plane.width - 1), sy);
                }
            }
        }
        out.data[y * width..(y + 1) * width].copy_from_slice(&row[..width]);
    }
    out
}

impl DecodedPlanes {
    pub fn luma(&self) -> &Plane {
        &self.planes[0]
    }

    /// Upsample chroma with the triangle filter and convert to RGB.
    pub fn to_rgb(&self) -> Result<RasterImage, JpegError> {
        let (w, h) = (self.width, self.height);
        let y = &self.planes[0];
        if self.planes.len() == 1 {
            let mut data = Vec::with_capacity(w * h * 3);
            for &v in &y.data {
                data.extend_from_slice(&[v, v, v]);
            }
            return RasterImage::new(w, h, data);
        }
        let (hm, vm) = self.frame.max_factors();
        let full: Vec<Plane> = self.planes[1..]
            .iter()
            .zip(&self.frame.components[1..])
            .map(|(p, c)| upsample(p, w, h, (hm / c.h) as usize, (vm / c.v) as usize))
            .collect();
        let luma = if y.width == w && y.height == h {
            y.clone()
        } else {
            upsample(
                y,
                w,
                h,
                (hm / self.frame.components[0].h) as usize,
                (vm / self.frame.components[0].v) as usize,
            )
        };
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            data.extend_from_slice(&ycbcr_to_rgb([
                luma.data[i],
                full[0].data[i],
                full[1].data[i],
            ]));
        }
        RasterImage::new(w, h, data)
    }
}

/// Decode a parsed file to RGB.
pub fn decode(image: &JfifImage, hooks: &mut CodecHooks<'_>) -> Result<RasterImage, JpegError> {
    decode_with(image, DecodeOptions::default(), hooks)
}

pub fn decode_with(
    image: &JfifImage,
    options: DecodeOptions,
    hooks: &mut CodecHooks<'_>,
) -> Result<RasterImage, JpegError> {
    if image.frame.components.len() == 3
        && image.frame.components[0].h < image.frame.max_factors().0
    {
        return Err(JpegError::UnsupportedMode(
            "luma sampled below chroma".into(),
        ));
    }
    decode_planes(image, options, hooks)?.to_rgb()
}

/// Parse and decode a byte stream.
pub fn decode_bytes(bytes: &[u8]) -> Result<RasterImage, JpegError> {
    decode(&parse_jfif(bytes)?, &mut CodecHooks::none())
}
