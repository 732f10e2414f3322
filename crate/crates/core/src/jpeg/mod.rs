//! Baseline sequential JPEG codec.

mod bits;
pub mod codec;
pub mod color;
pub mod dct;
pub mod entropy;
pub mod error;
pub mod huffman;
pub mod jfif;
pub mod planes;
pub mod quant;
pub mod resample;

pub use codec::{
    decode, decode_bytes, decode_coefficients, decode_luma_rows, decode_planes, decode_with,
    encode, encode_planes, encode_to_bytes, BlockPos, CodecHooks, DecodeOptions,
    DecodedCoefficients, DecodedPlanes, EncodeParams, HookError, PostIdctHook, PreDctHook,
};
pub use color::{rgb_to_luma, rgb_to_ycbcr, ycbcr_to_rgb};
pub use dct::{fdct, idct, Arithmetic, BlockTransform, DctPlan, FixedPointDct};
pub use entropy::{entropy_decode, entropy_encode, ComponentGrid};
pub use error::JpegError;
pub use huffman::{HuffmanSpec, HuffmanTables};
pub use jfif::{parse_jfif, serialize_jfif, JfifImage, MAX_SEGMENT_PAYLOAD};
pub use planes::{
    level_shift, level_unshift, subsample_420, Plane, RasterImage, SampleBlock, Subsampling,
    YcbcrPlanes, MIN_DIMENSION,
};
pub use quant::{
    dequantize, quantize, CoefficientBlock, QuantTable, STD_CHROMA_QUANT, STD_LUMA_QUANT, ZIGZAG,
};
pub use resample::{fit_within, resize_bilinear};
