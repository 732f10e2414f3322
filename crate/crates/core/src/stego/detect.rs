//! Finding out whether a file carries a payload, and how.

use super::bits::{extract_bits_from_luma, has_bit_prefix};
use super::capacity::{EmbedRegion, BANNER_ROWS};
use super::header::has_header_payload;
use super::StegoError;
use crate::ecc::N;
use crate::jpeg::{decode_luma_rows, parse_jfif, DecodeOptions, JfifImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMode {
    HeaderSegments,
    LuminanceBits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protection {
    HeaderEmbedded,
    BitEmbedded,
    None,
}

/// Check the header first, then try to read the bit-stream prefix from the
/// rows holding the first codeword.
pub fn detect_file(file: &JfifImage) -> Result<Protection, StegoError> {
    if has_header_payload(file) {
        return Ok(Protection::HeaderEmbedded);
    }
    let (w, h) = (file.width(), file.height());
    let Ok(region) = EmbedRegion::standard(w, h) else {
        return Ok(Protection::None);
    };
    if region.capacity().codewords() == 0 {
        return Ok(Protection::None);
    }
    let prefix_rows = (N * 4).div_ceil(w);
    let luma = decode_luma_rows(
        file,
        BANNER_ROWS..BANNER_ROWS + prefix_rows,
        DecodeOptions::default(),
    )?;
    let bytes = extract_bits_from_luma(&luma, &region)?;
    Ok(if has_bit_prefix(&bytes, &region) {
        Protection::BitEmbedded
    } else {
        Protection::None
    })
}

pub fn detect_protected(bytes: &[u8]) -> Result<Protection, StegoError> {
    detect_file(&parse_jfif(bytes)?)
}
