use thiserror::Error;

use crate::api::ChallengeView;
use crate::store::StoreError;

/// Every way a keyserver operation can be refused. `code()` is the stable
/// machine-readable name carried in HTTP error bodies.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid credentials")]
    Auth,
    #[error("rate limit exceeded, retry in {retry_after_secs} s")]
    RateLimited { retry_after_secs: u64 },
    #[error("session expired or unknown")]
    SessionExpired,
    #[error("invalid expiration date: {0}")]
    InvalidDate(String),
    #[error("the key has expired")]
    Expired,
    #[error("a CAPTCHA must be solved first")]
    CaptchaRequired(ChallengeView),
    #[error("hash does not match the published ciphertext")]
    HashMismatch,
    #[error("no such key")]
    NotFound,
    #[error("the key belongs to another account")]
    NotOwner,
    #[error("username is already registered")]
    UsernameTaken,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Auth => "auth_error",
            ServiceError::RateLimited { .. } => "rate_limited",
            ServiceError::SessionExpired => "session_expired",
            ServiceError::InvalidDate(_) => "invalid_date",
            ServiceError::Expired => "expired",
            ServiceError::CaptchaRequired(_) => "captcha_required",
            ServiceError::HashMismatch => "hash_mismatch",
            ServiceError::NotFound => "not_found",
            ServiceError::NotOwner => "not_owner",
            ServiceError::UsernameTaken => "username_taken",
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::Storage(_) => "internal",
        }
    }
}
