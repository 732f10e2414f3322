//! JFIF container: marker segments in, marker segments out.

use super::error::JpegError;
use super::huffman::HuffmanSpec;
use super::quant::QuantTable;

pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOS: u8 = 0xDA;
pub const DQT: u8 = 0xDB;
pub const DHT: u8 = 0xC4;
pub const DRI: u8 = 0xDD;
pub const COM: u8 = 0xFE;
pub const APP0: u8 = 0xE0;
pub const SOF0: u8 = 0xC0;
pub const SOF1: u8 = 0xC1;
pub const SOF2: u8 = 0xC2;

/// Largest payload a single marker segment can carry.
pub const MAX_SEGMENT_PAYLOAD: usize = 65533;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableClass {
    Dc = 0,
    Ac = 1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTableDef {
    pub class: TableClass,
    pub id: u8,
    pub spec: HuffmanSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Baseline,
    ExtendedSequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameComponent {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub quant_table: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub kind: FrameKind,
    pub precision: u8,
    pub width: u16,
    pub height: u16,
    pub components: Vec<FrameComponent>,
}

impl FrameHeader {
    pub fn max_factors(&self) -> (u8, u8) {
        let h = self.components.iter().map(|c| c.h).max().unwrap_or(1);
        let v = self.components.iter().map(|c| c.v).max().unwrap_or(1);
        (h, v)
    }

    /// MCU grid size for an interleaved scan.
    pub fn mcus(&self) -> (usize, usize) {
        let (hm, vm) = self.max_factors();
        (
            (self.width as usize).div_ceil(8 * hm as usize),
            (self.height as usize).div_ceil(8 * vm as usize),
        )
    }

    /// True sample dimensions of component `index`.
    pub fn component_size(&self, index: usize) -> (usize, usize) {
        let (hm, vm) = self.max_factors();
        let c = &self.components[index];
        (
            (self.width as usize * c.h as usize).div_ceil(hm as usize),
            (self.height as usize * c.v as usize).div_ceil(vm as usize),
        )
    }

    /// Block grid of component `index`, padded to whole MCUs.
    pub fn component_grid(&self, index: usize) -> (usize, usize) {
        let (mx, my) = self.mcus();
        let c = &self.components[index];
        (mx * c.h as usize, my * c.v as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanComponentSpec {
    pub id: u8,
    pub dc_table: u8,
    pub ac_table: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scan {
    /// Tables (re)defined between the previous scan and this one.
    pub tables: Vec<HuffmanTableDef>,
    pub components: Vec<ScanComponentSpec>,
    pub spectral_start: u8,
    pub spectral_end: u8,
    pub approx: u8,
    /// Entropy-coded bytes, including any RSTn markers.
    pub data: Vec<u8>,
}

/// An application marker segment kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppSegment {
    pub marker: u8,
    pub data: Vec<u8>,
}

/// A parsed baseline JFIF file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JfifImage {
    pub app_segments: Vec<AppSegment>,
    pub comments: Vec<Vec<u8>>,
    pub quant_tables: [Option<QuantTable>; 4],
    pub huffman_tables: Vec<HuffmanTableDef>,
    pub frame: FrameHeader,
    pub restart_interval: u16,
    pub scans: Vec<Scan>,
}

/// Standard JFIF 1.01 APP0 payload, square pixels.
pub fn jfif_app0() -> AppSegment {
    AppSegment {
        marker: APP0,
        data: vec![b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
    }
}

impl JfifImage {
    pub fn width(&self) -> usize {
        self.frame.width as usize
    }

    pub fn height(&self) -> usize {
        self.frame.height as usize
    }

    /// Quantization table used by component `index`.
    pub fn component_quant(&self, index: usize) -> Option<&QuantTable> {
        let c = self.frame.components.get(index)?;
        self.quant_tables.get(c.quant_table as usize)?.as_ref()
    }

    pub fn luma_quant(&self) -> Option<&QuantTable> {
        self.component_quant(0)
    }

    pub fn chroma_quant(&self) -> Option<&QuantTable> {
        self.component_quant(1)
    }

    /// Drop every COM and APPn segment; structural segments stay.
    pub fn strip_metadata(&mut self) {
        self.comments.clear();
        self.app_segments.clear();
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u8(&mut self) -> Result<u8, JpegError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| JpegError::parse(self.pos, "unexpected end of file"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, JpegError> {
        Ok(((self.u8()? as u16) << 8) | self.u8()? as u16)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], JpegError> {
        if self.pos + n > self.data.len() {
            return Err(JpegError::parse(self.pos, "segment runs past end of file"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Read a length-prefixed segment body.
    fn segment(&mut self) -> Result<(usize, &'a [u8]), JpegError> {
        let start = self.pos;
        let len = self.u16()? as usize;
        if len < 2 {
            return Err(JpegError::parse(start, format!("bad segment length {len}")));
        }
        Ok((start, self.take(len - 2)?))
    }
}

fn parse_dqt(
    offset: usize,
    body: &[u8],
    tables: &mut [Option<QuantTable>; 4],
) -> Result<(), JpegError> {
    let mut c = Cursor { data: body, pos: 0 };
    while c.pos < body.len() {
        let pq_tq = c.u8()?;
        let (precision, id) = (pq_tq >> 4, (pq_tq & 0x0F) as usize);
        if id > 3 || precision > 1 {
            return Err(JpegError::parse(
                offset,
                format!("bad DQT header {pq_tq:#04x}"),
            ));
        }
        let mut zz = [0u16; 64];
        for v in zz.iter_mut() {
            *v = if precision == 0 {
                c.u8()? as u16
            } else {
                c.u16()?
            };
        }
        tables[id] = Some(
            QuantTable::from_zigzag(&zz).map_err(|e| JpegError::parse(offset, e.to_string()))?,
        );
    }
    Ok(())
}

fn parse_dht(offset: usize, body: &[u8]) -> Result<Vec<HuffmanTableDef>, JpegError> {
    let mut c = Cursor { data: body, pos: 0 };
    let mut out = Vec::new();
    while c.pos < body.len() {
        let tc_th = c.u8()?;
        let class = match tc_th >> 4 {
            0 => TableClass::Dc,
            1 => TableClass::Ac,
            _ => return Err(JpegError::parse(offset, "bad DHT class")),
        };
        let id = tc_th & 0x0F;
        if id > 3 {
            return Err(JpegError::parse(offset, "bad DHT id"));
        }
        let mut counts = [0u8; 16];
        counts.copy_from_slice(c.take(16)?);
        let total: usize = counts.iter().map(|&n| n as usize).sum();
        let symbols = c.take(total)?.to_vec();
        let spec = HuffmanSpec::new(counts, symbols)
            .map_err(|e| JpegError::parse(offset, e.to_string()))?;
        out.push(HuffmanTableDef { class, id, spec });
    }
    Ok(out)
}

fn parse_sof(offset: usize, kind: FrameKind, body: &[u8]) -> Result<FrameHeader, JpegError> {
    let mut c = Cursor { data: body, pos: 0 };
    let precision = c.u8()?;
    if precision != 8 {
        return Err(JpegError::UnsupportedMode(format!(
            "{precision}-bit samples"
        )));
    }
    let height = c.u16()?;
    let width = c.u16()?;
    if width == 0 || height == 0 {
        return Err(JpegError::parse(offset, "zero frame dimension"));
    }
    let n = c.u8()? as usize;
    if n != 1 && n != 3 {
        return Err(JpegError::UnsupportedMode(format!("{n} components")));
    }
    let mut components = Vec::with_capacity(n);
    for _ in 0..n {
        let id = c.u8()?;
        let hv = c.u8()?;
        let tq = c.u8()?;
        let (h, v) = (hv >> 4, hv & 0x0F);
        if !(1..=4).contains(&h) || !(1..=4).contains(&v) || tq > 3 {
            return Err(JpegError::parse(offset, "bad frame component"));
        }
        components.push(FrameComponent {
            id,
            h,
            v,
            quant_table: tq,
        });
    }
    Ok(FrameHeader {
        kind,
        precision,
        width,
        height,
        components,
    })
}

fn parse_sos_header(
    offset: usize,
    body: &[u8],
) -> Result<(Vec<ScanComponentSpec>, u8, u8, u8), JpegError> {
    let mut c = Cursor { data: body, pos: 0 };
    let n = c.u8()? as usize;
    if n == 0 || n > 4 {
        return Err(JpegError::parse(offset, "bad scan component count"));
    }
    let mut comps = Vec::with_capacity(n);
    for _ in 0..n {
        let id = c.u8()?;
        let t = c.u8()?;
        comps.push(ScanComponentSpec {
            id,
            dc_table: t >> 4,
            ac_table: t & 0x0F,
        });
    }
    let ss = c.u8()?;
    let se = c.u8()?;
    let a = c.u8()?;
    Ok((comps, ss, se, a))
}

/// Parse a JFIF byte stream. Progressive, lossless, hierarchical and
/// arithmetic-coded files are rejected with [`JpegError::UnsupportedMode`].
pub fn parse_jfif(bytes: &[u8]) -> Result<JfifImage, JpegError> {
    if bytes.len() < 2 || bytes[0] != 0xFF || bytes[1] != SOI {
        return Err(JpegError::parse(0, "missing SOI marker"));
    }
    let mut c = Cursor {
        data: bytes,
        pos: 2,
    };
    let mut app_segments = Vec::new();
    let mut comments = Vec::new();
    let mut quant_tables: [Option<QuantTable>; 4] = [None; 4];
    let mut huffman_tables = Vec::new();
    let mut pending_tables = Vec::new();
    let mut frame = None;
    let mut restart_interval = 0u16;
    let mut scans = Vec::new();

    loop {
        let at = c.pos;
        let ff = c
            .u8()
            .map_err(|_| JpegError::parse(at, "missing EOI marker"))?;
        if ff != 0xFF {
            return Err(JpegError::parse(
                at,
                format!("expected marker, found {ff:#04x}"),
            ));
        }
        let mut marker = c.u8()?;
        while marker == 0xFF {
            marker = c.u8()?;
        }
        match marker {
            EOI => break,
            0xE0..=0xEF => {
                let (_, body) = c.segment()?;
                app_segments.push(AppSegment {
                    marker,
                    data: body.to_vec(),
                });
            }
            COM => {
                let (_, body) = c.segment()?;
                comments.push(body.to_vec());
            }
            DQT => {
                let (off, body) = c.segment()?;
                parse_dqt(off, body, &mut quant_tables)?;
            }
            DHT => {
                let (off, body) = c.segment()?;
                let defs = parse_dht(off, body)?;
                if scans.is_empty() {
                    huffman_tables.extend(defs);
                } else {
                    pending_tables.extend(defs);
                }
            }
            DRI => {
                let (off, body) = c.segment()?;
                if body.len() != 2 {
                    return Err(JpegError::parse(off, "bad DRI length"));
                }
                restart_interval = u16::from_be_bytes([body[0], body[1]]);
            }
            SOF0 | SOF1 => {
                let (off, body) = c.segment()?;
                if frame.is_some() {
                    return Err(JpegError::parse(off, "multiple frames"));
                }
                let kind = if marker == SOF0 {
                    FrameKind::Baseline
                } else {
                    FrameKind::ExtendedSequential
                };
                frame = Some(parse_sof(off, kind, body)?);
            }
            0xC2 | 0xC6 | 0xCA | 0xCE => {
                return Err(JpegError::UnsupportedMode("progressive DCT".into()))
            }
            0xC3 | 0xC7 | 0xCB | 0xCF => return Err(JpegError::UnsupportedMode("lossless".into())),
            0xC5 => return Err(JpegError::UnsupportedMode("hierarchical".into())),
            0xC9 | 0xCC | 0xCD => {
                return Err(JpegError::UnsupportedMode("arithmetic coding".into()))
            }
            SOS => {
                let (off, body) = c.segment()?;
                if frame.is_none() {
                    return Err(JpegError::parse(off, "scan before frame header"));
                }
                let (components, ss, se, approx) = parse_sos_header(off, body)?;
                let start = c.pos;
                let mut end = start;
                // entropy-coded data runs to the first marker that is not
                // stuffing or a restart marker
                while end + 1 < bytes.len() {
                    if bytes[end] == 0xFF {
                        let next = bytes[end + 1];
                        if next == 0x00 || (0xD0..=0xD7).contains(&next) {
                            end += 2;
                            continue;
                        }
                        if next == 0xFF {
                            end += 1;
                            continue;
                        }
                        break;
                    }
                    end += 1;
                }
                if end + 1 >= bytes.len() {
                    return Err(JpegError::parse(
                        start,
                        "scan data not terminated by a marker",
                    ));
                }
                scans.push(Scan {
                    tables: std::mem::take(&mut pending_tables),
                    components,
                    spectral_start: ss,
                    spectral_end: se,
                    approx,
                    data: bytes[start..end].to_vec(),
                });
                c.pos = end;
            }
            0xD0..=0xD7 | 0x01 => {}
            _ => {
                // DNL, DHP, EXP, JPGn and reserved markers: skip the body
                c.segment()?;
            }
        }
    }

    let frame = frame.ok_or_else(|| JpegError::parse(c.pos, "no frame header"))?;
    if scans.is_empty() {
        return Err(JpegError::parse(c.pos, "no scan"));
    }
    Ok(JfifImage {
        app_segments,
        comments,
        quant_tables,
        huffman_tables,
        frame,
        restart_interval,
        scans,
    })
}

fn push_segment(out: &mut Vec<u8>, marker: u8, body: &[u8]) -> Result<(), JpegError> {
    if body.len() > MAX_SEGMENT_PAYLOAD {
        return Err(JpegError::parse(
            out.len(),
            format!(
                "segment payload of {} bytes exceeds {MAX_SEGMENT_PAYLOAD}",
                body.len()
            ),
        ));
    }
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((body.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(body);
    Ok(())
}

fn dht_body(defs: &[HuffmanTableDef]) -> Vec<u8> {
    let mut body = Vec::new();
    for d in defs {
        body.push(((d.class as u8) << 4) | d.id);
        body.extend_from_slice(&d.spec.counts);
        body.extend_from_slice(&d.spec.symbols);
    }
    body
}

/// Serialize to a byte stream in the canonical segment order.
pub fn serialize_jfif(image: &JfifImage) -> Result<Vec<u8>, JpegError> {
    let scan_bytes: usize = image.scans.iter().map(|s| s.data.len()).sum();
    let comment_bytes: usize = image.comments.iter().map(|c| c.len() + 4).sum();
    let mut out = Vec::with_capacity(scan_bytes + comment_bytes + 1024);
    out.extend_from_slice(&[0xFF, SOI]);
    for app in &image.app_segments {
        push_segment(&mut out, app.marker, &app.data)?;
    }
    for comment in &image.comments {
        push_segment(&mut out, COM, comment)?;
    }
    for (id, table) in image.quant_tables.iter().enumerate() {
        if let Some(t) = table {
            let zz = t.zigzag();
            let mut body = Vec::with_capacity(65);
            body.push(id as u8);
            body.extend(zz.iter().map(|&v| v as u8));
            push_segment(&mut out, DQT, &body)?;
        }
    }
    let f = &image.frame;
    let mut sof = vec![f.precision];
    sof.extend_from_slice(&f.height.to_be_bytes());
    sof.extend_from_slice(&f.width.to_be_bytes());
    sof.push(f.components.len() as u8);
    for c in &f.components {
        sof.extend_from_slice(&[c.id, (c.h << 4) | c.v, c.quant_table]);
    }
    let sof_marker = match f.kind {
        FrameKind::Baseline => SOF0,
        FrameKind::ExtendedSequential => SOF1,
    };
    push_segment(&mut out, sof_marker, &sof)?;
    if !image.huffman_tables.is_empty() {
        push_segment(&mut out, DHT, &dht_body(&image.huffman_tables))?;
    }
    if image.restart_interval > 0 {
        push_segment(&mut out, DRI, &image.restart_interval.to_be_bytes())?;
    }
    for scan in &image.scans {
        if !scan.tables.is_empty() {
            push_segment(&mut out, DHT, &dht_body(&scan.tables))?;
        }
        let mut sos = vec![scan.components.len() as u8];
        for c in &scan.components {
            sos.extend_from_slice(&[c.id, (c.dc_table << 4) | c.ac_table]);
        }
        sos.extend_from_slice(&[scan.spectral_start, scan.spectral_end, scan.approx]);
        push_segment(&mut out, SOS, &sos)?;
        out.extend_from_slice(&scan.data);
    }
    out.extend_from_slice(&[0xFF, EOI]);
    Ok(out)
}
