//! Server settings: a TOML file, then `EPHEMERA_*` environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {name}: {reason}")]
    Env { name: &'static str, reason: String },
    #[error("a persistent store needs a master key (master_key or EPHEMERA_MASTER_KEY)")]
    MissingMasterKey,
    #[error("master key must be 64 hex digits")]
    BadMasterKey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    /// Append-only record log; `None` keeps everything in memory.
    pub store_path: Option<PathBuf>,
    /// 32-byte hex key wrapping stored keys.
    pub master_key: Option<String>,
    pub session_ttl_secs: u64,
    pub token_ttl_secs: u64,
    pub getkey_per_minute: u32,
    pub getkey_range_per_minute: u32,
    /// Limits for registration, login and the owner endpoints.
    pub account_per_minute: u32,
    pub account_range_per_minute: u32,
    pub pbkdf2_iterations: u32,
    pub captcha_ttl_secs: u64,
    pub captcha_solved_ttl_secs: u64,
    /// Take the client address from X-Forwarded-For (behind a TLS proxy).
    pub trust_forwarded_for: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8750".parse().unwrap(),
            store_path: None,
            master_key: None,
            session_ttl_secs: 15 * 60,
            token_ttl_secs: 12 * 3600,
            getkey_per_minute: 60,
            getkey_range_per_minute: 600,
            account_per_minute: 600,
            account_range_per_minute: 6000,
            pbkdf2_iterations: 100_000,
            captcha_ttl_secs: 300,
            captcha_solved_ttl_secs: 3600,
            trust_forwarded_for: false,
        }
    }
}

impl ServerConfig {
    /// Defaults, overlaid by `file` if given, overlaid by the environment.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_owned(),
                    source,
                })?;
                toml::from_str(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(name: &'static str, v: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse().map_err(|e: T::Err| ConfigError::Env {
                name,
                reason: e.to_string(),
            })
        }
        if let Some(v) = var("EPHEMERA_BIND") {
            self.bind = parse("EPHEMERA_BIND", v)?;
        }
        if let Some(v) = var("EPHEMERA_STORE") {
            self.store_path = Some(PathBuf::from(v));
        }
        if let Some(v) = var("EPHEMERA_MASTER_KEY") {
            self.master_key = Some(v);
        }
        if let Some(v) = var("EPHEMERA_GETKEY_PER_MINUTE") {
            self.getkey_per_minute = parse("EPHEMERA_GETKEY_PER_MINUTE", v)?;
        }
        if let Some(v) = var("EPHEMERA_GETKEY_RANGE_PER_MINUTE") {
            self.getkey_range_per_minute = parse("EPHEMERA_GETKEY_RANGE_PER_MINUTE", v)?;
        }
        if let Some(v) = var("EPHEMERA_ACCOUNT_PER_MINUTE") {
            self.account_per_minute = parse("EPHEMERA_ACCOUNT_PER_MINUTE", v)?;
        }
        if let Some(v) = var("EPHEMERA_ACCOUNT_RANGE_PER_MINUTE") {
            self.account_range_per_minute = parse("EPHEMERA_ACCOUNT_RANGE_PER_MINUTE", v)?;
        }
        if let Some(v) = var("EPHEMERA_SESSION_TTL_SECS") {
            self.session_ttl_secs = parse("EPHEMERA_SESSION_TTL_SECS", v)?;
        }
        Ok(())
    }

    /// The configured master key, if any.
    pub fn master_key_bytes(&self) -> Result<Option<[u8; 32]>, ConfigError> {
        let Some(text) = &self.master_key else {
            if self.store_path.is_some() {
                return Err(ConfigError::MissingMasterKey);
            }
            return Ok(None);
        };
        let mut out = [0u8; 32];
        hex::decode_to_slice(text.trim(), &mut out).map_err(|_| ConfigError::BadMasterKey)?;
        Ok(Some(out))
    }
}
