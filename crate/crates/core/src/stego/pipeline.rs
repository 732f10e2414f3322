//! Whole-file embedding and extraction in luminance-bit mode.

use super::bits::{
    extract_bits_from_luma, frame_payload, region_samples, symbol_writer, unframe_payload,
};
use super::capacity::EmbedRegion;
use super::StegoError;
use crate::ecc::StreamReport;
use crate::jpeg::{
    decode_luma_rows, encode_planes, CodecHooks, DecodeOptions, EncodeParams, JfifImage,
    PreDctHook, YcbcrPlanes,
};

/// A message read back from a cover, with what the decoder had to repair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extracted {
    pub message: Vec<u8>,
    pub report: StreamReport,
}

/// Frame, RS-encode and write `message` into the usable region of `cover`,
/// then compress with `params`. The symbols go in at the DCT input so they
/// never pass through colour conversion.
pub fn embed_message(
    cover: &YcbcrPlanes,
    message: &[u8],
    params: &EncodeParams,
) -> Result<JfifImage, StegoError> {
    let region = EmbedRegion::standard(cover.y.width, cover.y.height)?;
    let coded = frame_payload(message, &region)?;
    embed_coded(cover, &coded, &region, params)
}

/// Write already coded bytes into `cover` and compress.
pub fn embed_coded(
    cover: &YcbcrPlanes,
    coded: &[u8],
    region: &EmbedRegion,
    params: &EncodeParams,
) -> Result<JfifImage, StegoError> {
    if (cover.y.width, cover.y.height) != (region.width, region.height) {
        return Err(StegoError::DimensionMismatch {
            expected: (region.width, region.height),
            actual: (cover.y.width, cover.y.height),
        });
    }
    let samples = region_samples(coded, region)?;
    let mut writer = symbol_writer(&samples, *region);
    let hook: &mut PreDctHook<'_> = &mut writer;
    Ok(encode_planes(
        cover,
        params,
        &mut CodecHooks::pre_dct(hook),
    )?)
}

/// Raw symbol bytes of the usable region, before error correction.
pub fn extract_coded(file: &JfifImage) -> Result<(EmbedRegion, Vec<u8>), StegoError> {
    let region = EmbedRegion::standard(file.width(), file.height())?;
    let luma = decode_luma_rows(
        file,
        region.banner_rows..region.height,
        DecodeOptions::default(),
    )?;
    Ok((region, extract_bits_from_luma(&luma, &region)?))
}

/// Recover the message embedded by [`embed_message`].
pub fn extract_message(file: &JfifImage) -> Result<Extracted, StegoError> {
    let (region, coded) = extract_coded(file)?;
    let (message, report) = unframe_payload(&coded, &region)?;
    Ok(Extracted { message, report })
}
