//! Reed-Solomon error correction.

pub mod gf256;
pub mod rs;
pub mod stream;

pub use rs::{rs_correct, rs_decode, rs_encode, EccError, K, MAX_CORRECTABLE, N, PARITY};
pub use stream::{
    codewords_for, rs_decode_stream, rs_decode_stream_report, rs_encode_stream, StreamReport,
};
