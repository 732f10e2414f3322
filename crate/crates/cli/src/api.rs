//! Talking to a keyserver, over HTTP or in process.

use std::net::IpAddr;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use ephemera_core::crypto::SymmetricKey;
use ephemera_keyserver::api::{
    AddHashesRequest, AddHashesResponse, CaptchaAnswer, CaptchaVerifyResponse, ChallengeView,
    CreateKeyResponse, Credentials, ErrorBody, GetKeyRequest, GetKeyResponse, KeySummary,
    KeysResponse, LoginResponse, RegisterResponse, StatsResponse, UpdateRequest, UpdateResponse,
};
use ephemera_keyserver::{KeyService, ServiceError};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApiError {
    /// The server refused the request.
    #[error("{message} ({code})")]
    Service {
        code: String,
        message: String,
        challenge: Option<ChallengeView>,
    },
    #[error("transport: {0}")]
    Transport(String),
}

impl ApiError {
    pub fn code(&self) -> Option<&str> {
        match self {
            ApiError::Service { code, .. } => Some(code),
            ApiError::Transport(_) => None,
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let challenge = match &e {
            ServiceError::CaptchaRequired(c) => Some(c.clone()),
            _ => None,
        };
        ApiError::Service {
            code: e.code().to_owned(),
            message: e.to_string(),
            challenge,
        }
    }
}

/// The keyserver operations the client needs.
pub trait KeyApi: Send + Sync {
    fn register(&self, cred: &Credentials) -> Result<String, ApiError>;
    fn login(&self, cred: &Credentials) -> Result<LoginResponse, ApiError>;
    fn create_key(&self, token: &str) -> Result<CreateKeyResponse, ApiError>;
    fn add_hashes(&self, token: &str, req: &AddHashesRequest) -> Result<[u8; 16], ApiError>;
    fn get_key(&self, req: &GetKeyRequest) -> Result<SymmetricKey, ApiError>;
    fn verify_captcha(&self, answer: &CaptchaAnswer) -> Result<bool, ApiError>;
    fn update(&self, token: &str, req: &UpdateRequest) -> Result<DateTime<Utc>, ApiError>;
    fn list_keys(&self, token: &str) -> Result<Vec<KeySummary>, ApiError>;
    fn stats(&self) -> Result<StatsResponse, ApiError>;
}

/// Calls a [`KeyService`] directly, as if from `source`.
#[derive(Clone)]
pub struct LocalKeyApi {
    pub service: Arc<KeyService>,
    pub source: IpAddr,
}

impl LocalKeyApi {
    pub fn new(service: Arc<KeyService>, source: IpAddr) -> Self {
        Self { service, source }
    }
}

impl KeyApi for LocalKeyApi {
    fn register(&self, cred: &Credentials) -> Result<String, ApiError> {
        Ok(self.service.register(self.source, cred)?)
    }

    fn login(&self, cred: &Credentials) -> Result<LoginResponse, ApiError> {
        Ok(self.service.login(self.source, cred)?)
    }

    fn create_key(&self, token: &str) -> Result<CreateKeyResponse, ApiError> {
        Ok(self.service.create_key(self.source, token)?)
    }

    fn add_hashes(&self, token: &str, req: &AddHashesRequest) -> Result<[u8; 16], ApiError> {
        Ok(self.service.add_hashes(self.source, token, req)?)
    }

    fn get_key(&self, req: &GetKeyRequest) -> Result<SymmetricKey, ApiError> {
        Ok(self.service.get_key(self.source, req)?)
    }

    fn verify_captcha(&self, answer: &CaptchaAnswer) -> Result<bool, ApiError> {
        Ok(self
            .service
            .verify_captcha(self.source, &answer.challenge_id, &answer.solution)?)
    }

    fn update(&self, token: &str, req: &UpdateRequest) -> Result<DateTime<Utc>, ApiError> {
        Ok(self
            .service
            .update_expiration(self.source, token, &req.key_id, req.expdate)?)
    }

    fn list_keys(&self, token: &str) -> Result<Vec<KeySummary>, ApiError> {
        Ok(self.service.list_keys(self.source, token)?)
    }

    fn stats(&self) -> Result<StatsResponse, ApiError> {
        Ok(StatsResponse {
            live_sessions: self.service.live_sessions(),
            records: self.service.record_count(),
        })
    }
}

/// JSON over HTTP(S) against a running keyserver.
pub struct HttpKeyApi {
    base: String,
    client: reqwest::blocking::Client,
}

impl HttpKeyApi {
    pub fn new(base_url: &str) -> Result<Self, ApiError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ApiError::Transport(e.to_string()))?;
        Ok(Self::with_client(base_url, client))
    }

    pub fn with_client(base_url: &str, client: reqwest::blocking::Client) -> Self {
        Self {
            base: base_url.trim_end_matches('/').to_owned(),
            client,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send<T: DeserializeOwned>(
        &self,
        req: reqwest::blocking::RequestBuilder,
    ) -> Result<T, ApiError> {
        let resp = req.send().map_err(|e| ApiError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .bytes()
            .map_err(|e| ApiError::Transport(e.to_string()))?;
        if status.is_success() {
            return serde_json::from_slice(&body)
                .map_err(|e| ApiError::Transport(format!("bad response body: {e}")));
        }
        match serde_json::from_slice::<ErrorBody>(&body) {
            Ok(err) => Err(ApiError::Service {
                code: err.code,
                message: err.message,
                challenge: err.challenge,
            }),
            Err(_) => Err(ApiError::Transport(format!("HTTP {status}"))),
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        token: Option<&str>,
        body: &B,
    ) -> Result<T, ApiError> {
        let mut req = self.client.post(self.url(path)).json(body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        self.send(req)
    }
}

impl KeyApi for HttpKeyApi {
    fn register(&self, cred: &Credentials) -> Result<String, ApiError> {
        let r: RegisterResponse = self.post("/v1/register", None, cred)?;
        Ok(r.account_id)
    }

    fn login(&self, cred: &Credentials) -> Result<LoginResponse, ApiError> {
        self.post("/v1/login", None, cred)
    }

    fn create_key(&self, token: &str) -> Result<CreateKeyResponse, ApiError> {
        self.post("/v1/createkey", Some(token), &serde_json::json!({}))
    }

    fn add_hashes(&self, token: &str, req: &AddHashesRequest) -> Result<[u8; 16], ApiError> {
        let r: AddHashesResponse = self.post("/v1/addhashes", Some(token), req)?;
        Ok(r.key_id)
    }

    fn get_key(&self, req: &GetKeyRequest) -> Result<SymmetricKey, ApiError> {
        let r: GetKeyResponse = self.post("/v1/getkey", None, req)?;
        SymmetricKey::from_bytes(&r.key).map_err(|e| ApiError::Transport(e.to_string()))
    }

    fn verify_captcha(&self, answer: &CaptchaAnswer) -> Result<bool, ApiError> {
        let r: CaptchaVerifyResponse = self.post("/v1/captcha/verify", None, answer)?;
        Ok(r.passed)
    }

    fn update(&self, token: &str, req: &UpdateRequest) -> Result<DateTime<Utc>, ApiError> {
        let r: UpdateResponse = self.post("/v1/update", Some(token), req)?;
        Ok(r.expdate)
    }

    fn list_keys(&self, token: &str) -> Result<Vec<KeySummary>, ApiError> {
        let r: KeysResponse =
            self.send(self.client.get(self.url("/v1/keys")).bearer_auth(token))?;
        Ok(r.keys)
    }

    fn stats(&self) -> Result<StatsResponse, ApiError> {
        self.send(self.client.get(self.url("/v1/stats")))
    }
}
