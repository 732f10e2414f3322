use thiserror::Error;

#[derive(Debug, Error)]
pub enum JpegError {
    #[error("image dimensions {width}x{height} are below the 8x8 minimum")]
    InvalidDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    InvalidBuffer { expected: usize, actual: usize },
    #[error("invalid quantization table: {0}")]
    InvalidQuantTable(String),
    #[error("invalid Huffman table: {0}")]
    InvalidHuffmanTable(String),
    #[error("coefficient {value} outside the baseline range")]
    CoefficientOutOfRange { value: i32 },
    #[error("malformed JPEG at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unsupported JPEG mode: {0}")]
    UnsupportedMode(String),
    #[error("codec hook failed: {0}")]
    Hook(String),
}

impl JpegError {
    pub(crate) fn parse(offset: usize, reason: impl Into<String>) -> Self {
        JpegError::Parse {
            offset,
            reason: reason.into(),
        }
    }
}
