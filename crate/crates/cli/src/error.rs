use std::path::PathBuf;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::api::ApiError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("this image has expired{}", expired_suffix(.0))]
    Expired(Option<DateTime<Utc>>),
    #[error("the image carries no ephemera payload")]
    NotProtected,
    #[error("payload needs {needed} bytes but the cover holds {available}")]
    Capacity { needed: usize, available: usize },
    #[error("keyserver: {0}")]
    Api(#[from] ApiError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("download failed: {0}")]
    Download(String),
    #[error("image: {0}")]
    Image(String),
    #[error("payload damaged: {0}")]
    Corrupted(String),
    #[error("decryption failed; the payload was tampered with")]
    Decrypt,
    #[error("CAPTCHA not solved")]
    CaptchaFailed,
    #[error("no key matches {0:?}")]
    NoMatch(String),
    #[error("{0:?} matches {1} keys; use the key id")]
    Ambiguous(String, usize),
    #[error("{0}")]
    Usage(String),
}

fn expired_suffix(at: &Option<DateTime<Utc>>) -> String {
    match at {
        Some(t) => format!(" (expired {})", t.to_rfc3339()),
        None => String::new(),
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Expired(_) => 2,
            CliError::NotProtected => 3,
            CliError::Capacity { .. } => 4,
            CliError::Api(e) if e.code() == Some("expired") => 2,
            CliError::Api(_) | CliError::Download(_) | CliError::CaptchaFailed => 5,
            _ => 1,
        }
    }
}

impl From<ephemera_core::stego::StegoError> for CliError {
    fn from(e: ephemera_core::stego::StegoError) -> Self {
        use ephemera_core::stego::StegoError as S;
        match e {
            S::NotProtected => CliError::NotProtected,
            S::Capacity { needed, available } => CliError::Capacity { needed, available },
            S::Corrupted { .. } | S::HeaderInconsistent => CliError::Corrupted(e.to_string()),
            other => CliError::Image(other.to_string()),
        }
    }
}

impl From<ephemera_core::jpeg::JpegError> for CliError {
    fn from(e: ephemera_core::jpeg::JpegError) -> Self {
        CliError::Image(e.to_string())
    }
}
