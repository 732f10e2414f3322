//! Chunked RS(255, 191) over arbitrary-length byte streams.

use super::rs::{rs_correct, rs_encode, EccError, K, N};

/// Number of codewords needed for `len` payload bytes.
pub fn codewords_for(len: usize) -> usize {
    len.div_ceil(K)
}

/// Split into 191-byte chunks, zero-pad the last, and encode each.
pub fn rs_encode_stream(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(codewords_for(payload.len()) * N);
    let mut chunk = [0u8; K];
    for piece in payload.chunks(K) {
        chunk.fill(0);
        chunk[..piece.len()].copy_from_slice(piece);
        out.extend_from_slice(&rs_encode(&chunk).expect("chunk is exactly K bytes"));
    }
    out
}

/// Per-codeword outcome of a stream decode.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamReport {
    /// Repaired symbols per codeword.
    pub corrected: Vec<usize>,
}

impl StreamReport {
    pub fn total_corrected(&self) -> usize {
        self.corrected.iter().sum()
    }

    pub fn worst(&self) -> usize {
        self.corrected.iter().copied().max().unwrap_or(0)
    }
}

/// Decode a whole stream; output includes the zero padding of the last chunk.
pub fn rs_decode_stream(stream: &[u8]) -> Result<Vec<u8>, EccError> {
    rs_decode_stream_report(stream).map(|(d, _)| d)
}

pub fn rs_decode_stream_report(stream: &[u8]) -> Result<(Vec<u8>, StreamReport), EccError> {
    if !stream.len().is_multiple_of(N) {
        return Err(EccError::WrongLength {
            expected: stream.len().div_ceil(N) * N,
            actual: stream.len(),
        });
    }
    let mut out = Vec::with_capacity(stream.len() / N * K);
    let mut report = StreamReport::default();
    for (i, cw) in stream.chunks_exact(N).enumerate() {
        let mut buf: [u8; N] = cw.try_into().expect("exact chunk");
        let n = rs_correct(&mut buf).map_err(|_| EccError::DecodeFailure { codeword: i })?;
        report.corrected.push(n);
        out.extend_from_slice(&buf[..K]);
    }
    Ok((out, report))
}
