//! Payload carried in COM segments.
//!
//! Each segment body is `EPHC`, a big-endian u16 index, u16 count, u32 total
//! length, then a chunk of the payload.

use super::StegoError;
use crate::jpeg::{JfifImage, MAX_SEGMENT_PAYLOAD};

pub const HEADER_MAGIC: [u8; 4] = *b"EPHC";
pub const HEADER_PREFIX_LEN: usize = 12;
/// Payload bytes per comment segment.
pub const HEADER_CHUNK: usize = MAX_SEGMENT_PAYLOAD - HEADER_PREFIX_LEN;

/// Number of segments for a payload of `len` bytes.
pub fn header_segments_for(len: usize) -> usize {
    len.div_ceil(HEADER_CHUNK).max(1)
}

fn is_ours(comment: &[u8]) -> bool {
    comment.len() >= HEADER_PREFIX_LEN && comment[..4] == HEADER_MAGIC
}

/// Append the payload as tagged comment segments. Existing tagged segments
/// are replaced; other comments stay.
pub fn embed_header(file: &JfifImage, payload: &[u8]) -> Result<JfifImage, StegoError> {
    let count = header_segments_for(payload.len());
    if count > u16::MAX as usize || payload.len() > u32::MAX as usize {
        return Err(StegoError::Capacity {
            needed: payload.len(),
            available: u16::MAX as usize * HEADER_CHUNK,
        });
    }
    let mut out = file.clone();
    out.comments.retain(|c| !is_ours(c));
    let chunks: Vec<&[u8]> = if payload.is_empty() {
        vec![&[][..]]
    } else {
        payload.chunks(HEADER_CHUNK).collect()
    };
    for (i, chunk) in chunks.iter().enumerate() {
        let mut seg = Vec::with_capacity(HEADER_PREFIX_LEN + chunk.len());
        seg.extend_from_slice(&HEADER_MAGIC);
        seg.extend_from_slice(&(i as u16).to_be_bytes());
        seg.extend_from_slice(&(count as u16).to_be_bytes());
        seg.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        seg.extend_from_slice(chunk);
        out.comments.push(seg);
    }
    Ok(out)
}

/// True when any tagged comment segment is present.
pub fn has_header_payload(file: &JfifImage) -> bool {
    file.comments.iter().any(|c| is_ours(c))
}

/// Reassemble the payload from tagged comment segments.
pub fn extract_header(file: &JfifImage) -> Result<Vec<u8>, StegoError> {
    let segs: Vec<&Vec<u8>> = file.comments.iter().filter(|c| is_ours(c)).collect();
    if segs.is_empty() {
        return Err(StegoError::NotProtected);
    }
    let field = |s: &[u8], at: usize| u16::from_be_bytes([s[at], s[at + 1]]) as usize;
    let count = field(segs[0], 6);
    let total = u32::from_be_bytes(segs[0][8..12].try_into().unwrap()) as usize;
    if count != segs.len() || count != header_segments_for(total) {
        return Err(StegoError::HeaderInconsistent);
    }
    let mut parts: Vec<Option<&[u8]>> = vec![None; count];
    for s in &segs {
        let index = field(s, 4);
        let same_total = u32::from_be_bytes(s[8..12].try_into().unwrap()) as usize == total;
        if field(s, 6) != count || !same_total || index >= count || parts[index].is_some() {
            return Err(StegoError::HeaderInconsistent);
        }
        parts[index] = Some(&s[HEADER_PREFIX_LEN..]);
    }
    let mut out = Vec::with_capacity(total);
    for p in parts {
        out.extend_from_slice(p.expect("every index seen once"));
    }
    if out.len() != total {
        return Err(StegoError::HeaderInconsistent);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::{encode, CodecHooks, EncodeParams, RasterImage};

    fn file() -> JfifImage {
        let img = RasterImage::filled(16, 16, [128, 128, 128]).unwrap();
        let mut f = encode(&img, &EncodeParams::default(), &mut CodecHooks::none()).unwrap();
        f.comments.push(b"unrelated".to_vec());
        f
    }

    #[test]
    fn segment_counts() {
        assert_eq!(header_segments_for(200 * 1024), 4);
        assert_eq!(header_segments_for(0), 1);
        assert_eq!(header_segments_for(HEADER_CHUNK), 1);
        assert_eq!(header_segments_for(HEADER_CHUNK + 1), 2);
    }

    #[test]
    fn round_trip_sizes() {
        for len in [0usize, 1, HEADER_CHUNK, 200 * 1024] {
            let payload: Vec<u8> = (0..len).map(|i| (i % 251) as u8).collect();
            let f = embed_header(&file(), &payload).unwrap();
            assert_eq!(f.comments.len(), 1 + header_segments_for(len));
            assert_eq!(extract_header(&f).unwrap(), payload);
            // and through bytes
            let bytes = crate::jpeg::serialize_jfif(&f).unwrap();
            let back = crate::jpeg::parse_jfif(&bytes).unwrap();
            assert_eq!(extract_header(&back).unwrap(), payload);
        }
    }

    #[test]
    fn empty_is_single_segment_with_zero_length() {
        let f = embed_header(&file(), &[]).unwrap();
        let seg = f.comments.last().unwrap();
        assert_eq!(seg.len(), HEADER_PREFIX_LEN);
        assert_eq!(&seg[8..12], &[0, 0, 0, 0]);
    }

    #[test]
    fn missing_or_damaged() {
        assert!(matches!(
            extract_header(&file()),
            Err(StegoError::NotProtected)
        ));
        let mut f = embed_header(&file(), &vec![1; HEADER_CHUNK * 2]).unwrap();
        f.comments.pop();
        assert!(matches!(
            extract_header(&f),
            Err(StegoError::HeaderInconsistent)
        ));
    }
}
