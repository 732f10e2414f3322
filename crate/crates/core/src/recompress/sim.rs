//! Upload recompression as a site would do it.

use super::profile::SiteProfile;
use crate::jpeg::{
    decode_with, encode, fit_within, parse_jfif, resize_bilinear, serialize_jfif, CodecHooks,
    DecodeOptions, EncodeParams, JpegError,
};

/// Strip metadata if the profile says so, decode, shrink to fit, and
/// re-encode with the profile's tables.
pub fn recompress(bytes: &[u8], profile: &SiteProfile) -> Result<Vec<u8>, JpegError> {
    let file = parse_jfif(bytes)?;
    let options = DecodeOptions {
        arithmetic: profile.arithmetic,
    };
    let image = decode_with(&file, options, &mut CodecHooks::none())?;
    let (w, h) = fit_within(
        image.width(),
        image.height(),
        profile.max_width,
        profile.max_height,
    );
    let image = resize_bilinear(&image, w, h)?;
    let mut params = EncodeParams::with_tables(
        profile.luma_quant,
        profile.chroma_quant,
        profile.chroma_subsampling,
    );
    params.arithmetic = profile.arithmetic;
    let mut out = encode(&image, &params, &mut CodecHooks::none())?;
    if profile.strip_metadata {
        out.strip_metadata();
    } else {
        out.comments = file.comments;
        out.app_segments = file.app_segments;
    }
    serialize_jfif(&out)
}
