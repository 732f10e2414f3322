//! Self-describing payload envelope.
//!
//! Layout, all integers big-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `EPHE` |
//! | 1     | version (1) |
//! | 2     | keyserver URL length `u` |
//! | u     | keyserver URL, UTF-8 |
//! | 16    | key id |
//! | 16    | IV |
//! | 4     | ciphertext length `c` |
//! | c     | ciphertext |

use super::{Iv, BLOCK_LEN, IV_LEN};
use thiserror::Error;

pub const ENVELOPE_MAGIC: [u8; 4] = *b"EPHE";
pub const ENVELOPE_VERSION: u8 = 1;
/// Envelope size without the URL and ciphertext.
pub const ENVELOPE_FIXED_LEN: usize = 4 + 1 + 2 + 16 + IV_LEN + 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("not an envelope (bad magic)")]
    NotEnvelope,
    #[error("unsupported envelope version {0}")]
    VersionError(u8),
    #[error("envelope truncated")]
    Truncated,
    #[error("invalid envelope field: {0}")]
    Invalid(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PayloadEnvelope {
    pub keyserver_url: String,
    pub key_id: [u8; 16],
    pub iv: Iv,
    pub ciphertext: Vec<u8>,
}

impl PayloadEnvelope {
    pub fn serialized_len(&self) -> usize {
        ENVELOPE_FIXED_LEN + self.keyserver_url.len() + self.ciphertext.len()
    }
}

fn validate(env: &PayloadEnvelope) -> Result<(), EnvelopeError> {
    if env.keyserver_url.is_empty() {
        return Err(EnvelopeError::Invalid("keyserver URL is empty"));
    }
    if env.keyserver_url.len() > u16::MAX as usize {
        return Err(EnvelopeError::Invalid("keyserver URL too long"));
    }
    if env.ciphertext.is_empty() || !env.ciphertext.len().is_multiple_of(BLOCK_LEN) {
        return Err(EnvelopeError::Invalid(
            "ciphertext length is not a positive multiple of 16",
        ));
    }
    if env.ciphertext.len() > u32::MAX as usize {
        return Err(EnvelopeError::Invalid("ciphertext too long"));
    }
    Ok(())
}

pub fn build_envelope(env: &PayloadEnvelope) -> Result<Vec<u8>, EnvelopeError> {
    validate(env)?;
    let mut out = Vec::with_capacity(env.serialized_len());
    out.extend_from_slice(&ENVELOPE_MAGIC);
    out.push(ENVELOPE_VERSION);
    out.extend_from_slice(&(env.keyserver_url.len() as u16).to_be_bytes());
    out.extend_from_slice(env.keyserver_url.as_bytes());
    out.extend_from_slice(&env.key_id);
    out.extend_from_slice(&env.iv);
    out.extend_from_slice(&(env.ciphertext.len() as u32).to_be_bytes());
    out.extend_from_slice(&env.ciphertext);
    Ok(out)
}

/// Parse an envelope. Trailing bytes after the ciphertext are ignored so the
/// caller can hand over a padded buffer.
pub fn parse_envelope(bytes: &[u8]) -> Result<PayloadEnvelope, EnvelopeError> {
    if bytes.len() < 4 || bytes[..4] != ENVELOPE_MAGIC {
        return Err(EnvelopeError::NotEnvelope);
    }
    let mut pos = 4;
    let mut take = |n: usize| -> Result<&[u8], EnvelopeError> {
        let s = bytes.get(pos..pos + n).ok_or(EnvelopeError::Truncated)?;
        pos += n;
        Ok(s)
    };
    let version = take(1)?[0];
    if version != ENVELOPE_VERSION {
        return Err(EnvelopeError::VersionError(version));
    }
    let url_len = u16::from_be_bytes(take(2)?.try_into().unwrap()) as usize;
    let url = std::str::from_utf8(take(url_len)?)
        .map_err(|_| EnvelopeError::Invalid("keyserver URL is not UTF-8"))?
        .to_owned();
    let key_id: [u8; 16] = take(16)?.try_into().unwrap();
    let iv: Iv = take(IV_LEN)?.try_into().unwrap();
    let ct_len = u32::from_be_bytes(take(4)?.try_into().unwrap()) as usize;
    let ciphertext = take(ct_len)?.to_vec();
    let env = PayloadEnvelope {
        keyserver_url: url,
        key_id,
        iv,
        ciphertext,
    };
    validate(&env)?;
    Ok(env)
}
