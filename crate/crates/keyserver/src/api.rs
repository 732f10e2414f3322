//! JSON bodies of the HTTP interface. Binary fields travel as lowercase hex.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::hexser;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credentials {
    pub username: String,
    pub password: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub account_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateKeyResponse {
    #[serde(with = "hexser")]
    pub key: [u8; 32],
    pub session_id: String,
    pub session_expires_at: DateTime<Utc>,
}

impl std::fmt::Debug for CreateKeyResponse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CreateKeyResponse")
            .field("session_id", &self.session_id)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddHashesRequest {
    pub session_id: String,
    /// Absent means the owner has not chosen a date yet.
    pub expdate: Option<DateTime<Utc>>,
    #[serde(with = "hexser")]
    pub hash: [u8; 32],
    pub description: String,
    #[serde(default)]
    pub captcha_required: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddHashesResponse {
    #[serde(with = "hexser")]
    pub key_id: [u8; 16],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptchaAnswer {
    pub challenge_id: String,
    pub solution: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GetKeyRequest {
    #[serde(with = "hexser")]
    pub key_id: [u8; 16],
    #[serde(with = "hexser")]
    pub hash: [u8; 32],
    #[serde(default)]
    pub captcha: Option<CaptchaAnswer>,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GetKeyResponse {
    #[serde(with = "hexser")]
    pub key: [u8; 32],
}

impl std::fmt::Debug for GetKeyResponse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("GetKeyResponse(..)")
    }
}

/// New expiration: a timestamp, or the server's current time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpiryUpdate {
    Now,
    At(DateTime<Utc>),
}

impl Serialize for ExpiryUpdate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExpiryUpdate::Now => s.serialize_str("now"),
            ExpiryUpdate::At(t) => t.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ExpiryUpdate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for ExpiryUpdate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("now") {
            return Ok(ExpiryUpdate::Now);
        }
        DateTime::parse_from_rfc3339(s)
            .map(|t| ExpiryUpdate::At(t.with_timezone(&Utc)))
            .map_err(|e| format!("expected RFC 3339 timestamp or \"now\": {e}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateRequest {
    #[serde(with = "hexser")]
    pub key_id: [u8; 16],
    pub expdate: ExpiryUpdate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateResponse {
    #[serde(with = "hexser")]
    pub key_id: [u8; 16],
    pub expdate: DateTime<Utc>,
}

/// One row of an owner's key listing. Never carries key material.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySummary {
    #[serde(with = "hexser")]
    pub key_id: [u8; 16],
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub expdate: Option<DateTime<Utc>>,
    pub captcha_required: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeysResponse {
    pub keys: Vec<KeySummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptchaVerifyResponse {
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeView {
    pub challenge_id: String,
    pub prompt: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub challenge: Option<ChallengeView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_after_secs: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsResponse {
    pub live_sessions: usize,
    pub records: usize,
}
