//! Key service for ephemera: mints AES keys for publishers, releases them to
//! viewers who prove they hold the ciphertext, and refuses once a key's
//! expiration date has passed.

pub mod api;
pub mod auth;
pub mod captcha;
pub mod clock;
pub mod config;
pub mod error;
mod hexser;
pub mod http;
pub mod ratelimit;
pub mod service;
pub mod store;

pub use api::ExpiryUpdate;
pub use captcha::{ArithmeticCaptcha, CaptchaProvider};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServerConfig;
pub use error::ServiceError;
pub use http::{router, serve, AppState};
pub use service::{Endpoint, KeyService, StartupError};
