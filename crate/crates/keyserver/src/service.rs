//! The key service proper, independent of transport. Every operation takes
//! the caller's network address for rate limiting and CAPTCHA bookkeeping.

use std::net::IpAddr;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use dashmap::DashMap;
use ephemera_core::crypto::SymmetricKey;
use rand::RngCore;
use thiserror::Error;

use crate::api::{
    AddHashesRequest, CreateKeyResponse, Credentials, ExpiryUpdate, GetKeyRequest, KeySummary,
    LoginResponse,
};
use crate::auth::{ct_eq, hash_password};
use crate::captcha::{ArithmeticCaptcha, CaptchaGate, CaptchaProvider, CaptchaScope};
use crate::clock::Clock;
use crate::config::{ConfigError, ServerConfig};
use crate::error::ServiceError;
use crate::ratelimit::{BucketConfig, RateLimiter};
use crate::store::{Account, KeyId, KeyRecord, Store, StoreError, UpdateOutcome};

const MAX_DESCRIPTION: usize = 1024;
const MAX_USERNAME: usize = 64;
const MIN_PASSWORD: usize = 8;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Which limiter a request is charged to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// Anonymous viewers: key retrieval and CAPTCHA answers.
    Public,
    /// Registration, login and owner operations.
    Account,
}

struct Session {
    owner: String,
    expires_at: DateTime<Utc>,
    key: SymmetricKey,
}

struct Token {
    owner: String,
    expires_at: DateTime<Utc>,
}

pub struct KeyService {
    clock: Arc<dyn Clock>,
    store: Store,
    sessions: DashMap<String, Session>,
    tokens: DashMap<String, Token>,
    public_limits: RateLimiter,
    account_limits: RateLimiter,
    captcha: CaptchaGate,
    session_ttl: Duration,
    token_ttl: Duration,
    iterations: u32,
}

fn random_hex<const N: usize>() -> String {
    let mut buf = [0u8; N];
    rand::rngs::OsRng.fill_bytes(&mut buf);
    hex::encode(buf)
}

impl KeyService {
    /// Build from config with the arithmetic CAPTCHA stub.
    pub fn new(config: &ServerConfig, clock: Arc<dyn Clock>) -> Result<Self, StartupError> {
        Self::with_captcha(config, clock, Box::new(ArithmeticCaptcha))
    }

    pub fn with_captcha(
        config: &ServerConfig,
        clock: Arc<dyn Clock>,
        provider: Box<dyn CaptchaProvider>,
    ) -> Result<Self, StartupError> {
        let master = match config.master_key_bytes()? {
            Some(bytes) => SymmetricKey::from_bytes(&bytes).expect("32 bytes"),
            None => SymmetricKey::generate(),
        };
        let store = match &config.store_path {
            Some(path) => Store::open(path, master)?,
            None => Store::in_memory(master),
        };
        let secs = |s: u64| Duration::seconds(s.min(i64::MAX as u64 / 1000) as i64);
        Ok(Self {
            clock,
            store,
            sessions: DashMap::new(),
            tokens: DashMap::new(),
            public_limits: RateLimiter::new(
                BucketConfig::per_minute(config.getkey_per_minute),
                BucketConfig::per_minute(config.getkey_range_per_minute),
            ),
            account_limits: RateLimiter::new(
                BucketConfig::per_minute(config.account_per_minute),
                BucketConfig::per_minute(config.account_range_per_minute),
            ),
            captcha: CaptchaGate::new(
                provider,
                secs(config.captcha_ttl_secs),
                secs(config.captcha_solved_ttl_secs),
            ),
            session_ttl: secs(config.session_ttl_secs),
            token_ttl: secs(config.token_ttl_secs),
            iterations: config.pbkdf2_iterations.max(1),
        })
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn rate_limit_check(&self, source: IpAddr, endpoint: Endpoint) -> Result<(), ServiceError> {
        let limiter = match endpoint {
            Endpoint::Public => &self.public_limits,
            Endpoint::Account => &self.account_limits,
        };
        limiter
            .check(source, self.now())
            .map_err(|wait| ServiceError::RateLimited {
                retry_after_secs: wait.ceil().clamp(1.0, 86_400.0) as u64,
            })
    }

    pub fn register(&self, source: IpAddr, cred: &Credentials) -> Result<String, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let username = cred.username.trim();
        if username.is_empty() || username.len() > MAX_USERNAME {
            return Err(ServiceError::InvalidRequest(format!(
                "username must be 1 to {MAX_USERNAME} bytes"
            )));
        }
        if cred.password.chars().count() < MIN_PASSWORD {
            return Err(ServiceError::InvalidRequest(format!(
                "password must have at least {MIN_PASSWORD} characters"
            )));
        }
        let salt: [u8; 16] = rand::random();
        let account = Account {
            id: random_hex::<16>(),
            username: username.to_owned(),
            salt,
            password_hash: hash_password(&cred.password, &salt, self.iterations),
            iterations: self.iterations,
        };
        let id = account.id.clone();
        if !self.store.insert_account(account)? {
            return Err(ServiceError::UsernameTaken);
        }
        Ok(id)
    }

    pub fn login(&self, source: IpAddr, cred: &Credentials) -> Result<LoginResponse, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let account = self
            .store
            .account_by_name(cred.username.trim())
            .ok_or(ServiceError::Auth)?;
        let computed = hash_password(&cred.password, &account.salt, account.iterations);
        if !ct_eq(&computed, &account.password_hash) {
            return Err(ServiceError::Auth);
        }
        let token = random_hex::<32>();
        let expires_at = self.now() + self.token_ttl;
        self.tokens.insert(
            token.clone(),
            Token {
                owner: account.id,
                expires_at,
            },
        );
        Ok(LoginResponse { token, expires_at })
    }

    /// Resolve a bearer token to its account.
    pub fn authenticate(&self, token: &str) -> Result<String, ServiceError> {
        let now = self.now();
        match self.tokens.get(token) {
            Some(t) if t.expires_at > now => Ok(t.owner.clone()),
            _ => Err(ServiceError::Auth),
        }
    }

    /// Mint a key and a session to attach hashes to. Nothing durable yet.
    pub fn create_key(
        &self,
        source: IpAddr,
        token: &str,
    ) -> Result<CreateKeyResponse, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let owner = self.authenticate(token)?;
        let key = SymmetricKey::generate();
        let session_id = random_hex::<16>();
        let session_expires_at = self.now() + self.session_ttl;
        let response = CreateKeyResponse {
            key: *key.as_bytes(),
            session_id: session_id.clone(),
            session_expires_at,
        };
        self.sessions.insert(
            session_id,
            Session {
                owner,
                expires_at: session_expires_at,
                key,
            },
        );
        Ok(response)
    }

    /// Store one ciphertext hash under the session's key.
    pub fn add_hashes(
        &self,
        source: IpAddr,
        token: &str,
        req: &AddHashesRequest,
    ) -> Result<KeyId, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let owner = self.authenticate(token)?;
        let now = self.now();
        let key = match self.sessions.get(&req.session_id) {
            Some(s) if s.expires_at > now && s.owner == owner => s.key.clone(),
            _ => return Err(ServiceError::SessionExpired),
        };
        if let Some(t) = req.expdate {
            if t <= now {
                return Err(ServiceError::InvalidDate(format!(
                    "{t} is not in the future; publish first, then expire with an update"
                )));
            }
        }
        if req.description.len() > MAX_DESCRIPTION {
            return Err(ServiceError::InvalidRequest(format!(
                "description longer than {MAX_DESCRIPTION} bytes"
            )));
        }
        let key_id = loop {
            let id: KeyId = rand::random();
            if !self.store.contains_record(&id) {
                break id;
            }
        };
        self.store.insert_record(KeyRecord {
            key_id,
            key,
            expdate: req.expdate,
            ciphertext_hash: req.hash,
            description: req.description.clone(),
            created_at: now,
            captcha_required: req.captcha_required,
            owner,
        })?;
        Ok(key_id)
    }

    /// Release a key. Checks run in a fixed order: expiry, then the hash,
    /// then the CAPTCHA.
    pub fn get_key(
        &self,
        source: IpAddr,
        req: &GetKeyRequest,
    ) -> Result<SymmetricKey, ServiceError> {
        self.rate_limit_check(source, Endpoint::Public)?;
        let now = self.now();
        enum Gate {
            Expired,
            Mismatch,
            Captcha(CaptchaScope, SymmetricKey),
            Open(SymmetricKey),
        }
        let gate = self
            .store
            .with_record(&req.key_id, |rec| {
                if rec.is_expired(now) {
                    Gate::Expired
                } else if !ct_eq(&rec.ciphertext_hash, &req.hash) {
                    Gate::Mismatch
                } else if rec.captcha_required {
                    let scope = CaptchaScope {
                        owner: rec.owner.clone(),
                        description: rec.description.clone(),
                    };
                    Gate::Captcha(scope, rec.key.clone())
                } else {
                    Gate::Open(rec.key.clone())
                }
            })
            .ok_or(ServiceError::NotFound)?;
        match gate {
            Gate::Expired => Err(ServiceError::Expired),
            Gate::Mismatch => Err(ServiceError::HashMismatch),
            Gate::Open(key) => Ok(key),
            Gate::Captcha(scope, key) => {
                if self.captcha.is_solved(source, &scope, now) {
                    return Ok(key);
                }
                if let Some(answer) = &req.captcha {
                    let solved =
                        self.captcha
                            .verify(source, &answer.challenge_id, &answer.solution, now);
                    if solved.as_ref() == Some(&scope) {
                        return Ok(key);
                    }
                }
                Err(ServiceError::CaptchaRequired(
                    self.captcha.issue(scope, now),
                ))
            }
        }
    }

    /// Answer a challenge without asking for a key. A pass unlocks the
    /// challenge's album for this source.
    pub fn verify_captcha(
        &self,
        source: IpAddr,
        challenge_id: &str,
        solution: &str,
    ) -> Result<bool, ServiceError> {
        self.rate_limit_check(source, Endpoint::Public)?;
        Ok(self
            .captcha
            .verify(source, challenge_id, solution, self.now())
            .is_some())
    }

    /// Move a record's expiration. `Now` means the server's clock, so the
    /// very next `get_key` sees the key as expired.
    pub fn update_expiration(
        &self,
        source: IpAddr,
        token: &str,
        key_id: &KeyId,
        update: ExpiryUpdate,
    ) -> Result<DateTime<Utc>, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let owner = self.authenticate(token)?;
        let when = match update {
            ExpiryUpdate::Now => self.now(),
            ExpiryUpdate::At(t) => t,
        };
        match self.store.update_expiry(key_id, &owner, Some(when))? {
            UpdateOutcome::Updated => Ok(when),
            UpdateOutcome::NotFound => Err(ServiceError::NotFound),
            UpdateOutcome::NotOwner => Err(ServiceError::NotOwner),
        }
    }

    pub fn list_keys(&self, source: IpAddr, token: &str) -> Result<Vec<KeySummary>, ServiceError> {
        self.rate_limit_check(source, Endpoint::Account)?;
        let owner = self.authenticate(token)?;
        Ok(self
            .store
            .records_of(&owner)
            .into_iter()
            .map(|r| KeySummary {
                key_id: r.key_id,
                description: r.description,
                created_at: r.created_at,
                expdate: r.expdate,
                captcha_required: r.captcha_required,
            })
            .collect())
    }

    pub fn live_sessions(&self) -> usize {
        let now = self.now();
        self.sessions.iter().filter(|s| s.expires_at > now).count()
    }

    pub fn record_count(&self) -> usize {
        self.store.record_count()
    }

    /// Drop expired sessions, tokens, challenges and idle limiter state.
    pub fn purge_expired(&self) {
        let now = self.now();
        self.sessions.retain(|_, s| s.expires_at > now);
        self.tokens.retain(|_, t| t.expires_at > now);
        self.captcha.purge(now);
        self.public_limits.purge_idle(now);
        self.account_limits.purge_idle(now);
    }
}
