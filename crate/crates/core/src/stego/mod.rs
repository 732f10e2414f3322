//! Hiding payloads in cover JPEGs: two-bit luminance symbols that survive
//! recompression, and tagged comment segments for paths that keep headers.

mod bits;
mod capacity;
mod container;
mod detect;
mod header;
mod pipeline;

pub use bits::{
    bytes_to_samples, decode_symbol, embed_bits, encode_symbol, extract_bits,
    extract_bits_from_luma, frame_payload, has_bit_prefix, region_samples, samples_to_bytes,
    symbol_writer, unframe_payload, BIT_MAGIC, FRAME_PREFIX_LEN, PAD_SAMPLE,
};
pub use capacity::{compute_capacity, Capacity, EmbedRegion, BANNER_ROWS, BITS_PER_SAMPLE};
pub use container::{make_container, BODY_GRAY};
pub use detect::{detect_file, detect_protected, EmbedMode, Protection};
pub use header::{
    embed_header, extract_header, has_header_payload, header_segments_for, HEADER_CHUNK,
    HEADER_MAGIC, HEADER_PREFIX_LEN,
};

pub use pipeline::{embed_coded, embed_message, extract_coded, extract_message, Extracted};

use crate::jpeg::JpegError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StegoError {
    #[error("payload needs {needed} bytes but only {available} fit")]
    Capacity { needed: usize, available: usize },
    #[error("invalid embedding region {width}x{height} with {banner_rows} banner rows")]
    InvalidRegion {
        width: usize,
        height: usize,
        banner_rows: usize,
    },
    #[error("image is {actual:?}, region expects {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("image carries no payload")]
    NotProtected,
    #[error("payload codeword {codeword} is damaged beyond repair")]
    Corrupted { codeword: usize },
    #[error("tagged comment segments are inconsistent")]
    HeaderInconsistent,
    #[error(transparent)]
    Jpeg(#[from] JpegError),
}
