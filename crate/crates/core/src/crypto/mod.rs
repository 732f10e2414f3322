//! AES-256-CBC, SHA-256 and the payload envelope.

mod envelope;

pub use envelope::{
    build_envelope, parse_envelope, EnvelopeError, PayloadEnvelope, ENVELOPE_FIXED_LEN,
    ENVELOPE_MAGIC, ENVELOPE_VERSION,
};

use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

type Aes256CbcEnc = cbc::Encryptor<aes::Aes256>;
type Aes256CbcDec = cbc::Decryptor<aes::Aes256>;

pub const KEY_LEN: usize = 32;
pub const IV_LEN: usize = 16;
pub const BLOCK_LEN: usize = 16;

pub type Iv = [u8; IV_LEN];
pub type Digest256 = [u8; 32];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("key must be {KEY_LEN} bytes, got {0}")]
    KeyLength(usize),
    #[error("decryption failed: wrong key or corrupted ciphertext")]
    Decrypt,
}

/// 256-bit AES key. Debug output never shows the bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; KEY_LEN]);

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

impl SymmetricKey {
    /// Fresh key from the operating system RNG.
    pub fn generate() -> Self {
        let mut k = [0u8; KEY_LEN];
        rand::rngs::OsRng.fill_bytes(&mut k);
        Self(k)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let k: [u8; KEY_LEN] = bytes
            .try_into()
            .map_err(|_| CryptoError::KeyLength(bytes.len()))?;
        Ok(Self(k))
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl Drop for SymmetricKey {
    fn drop(&mut self) {
        // best effort; the optimizer may still keep copies elsewhere
        for b in self.0.iter_mut() {
            unsafe { std::ptr::write_volatile(b, 0) };
        }
    }
}

/// Ciphertext length for a plaintext of `len` bytes.
pub fn ciphertext_len(len: usize) -> usize {
    (len / BLOCK_LEN + 1) * BLOCK_LEN
}

/// Encrypt under a fresh random IV.
pub fn encrypt(key: &SymmetricKey, plaintext: &[u8]) -> (Iv, Vec<u8>) {
    let mut iv = [0u8; IV_LEN];
    rand::rngs::OsRng.fill_bytes(&mut iv);
    let ct = encrypt_with_iv(key, &iv, plaintext);
    (iv, ct)
}

/// Encrypt with a caller-chosen IV.
pub fn encrypt_with_iv(key: &SymmetricKey, iv: &Iv, plaintext: &[u8]) -> Vec<u8> {
    Aes256CbcEnc::new(key.as_bytes().into(), iv.into()).encrypt_padded_vec_mut::<Pkcs7>(plaintext)
}

pub fn decrypt(key: &SymmetricKey, iv: &Iv, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(BLOCK_LEN) {
        return Err(CryptoError::Decrypt);
    }
    Aes256CbcDec::new(key.as_bytes().into(), iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(ciphertext)
        .map_err(|_| CryptoError::Decrypt)
}

/// SHA-256 digest.
pub fn hash(bytes: &[u8]) -> Digest256 {
    Sha256::digest(bytes).into()
}
