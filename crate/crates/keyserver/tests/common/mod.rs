#![allow(dead_code)]

use std::net::IpAddr;
use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use ephemera_keyserver::api::{AddHashesRequest, Credentials};
use ephemera_keyserver::{CaptchaProvider, KeyService, ManualClock, ServerConfig};

pub struct SevenCaptcha;

impl CaptchaProvider for SevenCaptcha {
    fn generate(&self) -> (String, String) {
        ("Type seven".into(), "7".into())
    }
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2031, 5, 1, 12, 0, 0).unwrap()
}

pub fn ip(s: &str) -> IpAddr {
    s.parse().unwrap()
}

pub fn test_config() -> ServerConfig {
    ServerConfig {
        pbkdf2_iterations: 10,
        ..ServerConfig::default()
    }
}

pub struct Fixture {
    pub clock: Arc<ManualClock>,
    pub service: KeyService,
}

pub fn fixture_with(config: ServerConfig) -> Fixture {
    let clock = Arc::new(ManualClock::new(t0()));
    let service = KeyService::with_captcha(&config, clock.clone(), Box::new(SevenCaptcha)).unwrap();
    Fixture { clock, service }
}

pub fn fixture() -> Fixture {
    fixture_with(test_config())
}

pub fn cred(name: &str) -> Credentials {
    Credentials {
        username: name.into(),
        password: "correct horse battery".into(),
    }
}

impl Fixture {
    /// Register and log in; returns the bearer token.
    pub fn account(&self, name: &str) -> String {
        let owner = ip("10.9.9.9");
        self.service.register(owner, &cred(name)).unwrap();
        self.service.login(owner, &cred(name)).unwrap().token
    }

    /// Publish one hash and return its key id and key bytes.
    pub fn publish(
        &self,
        token: &str,
        hash: [u8; 32],
        expires_in: Option<Duration>,
    ) -> ([u8; 16], [u8; 32]) {
        let owner = ip("10.9.9.9");
        let created = self.service.create_key(owner, token).unwrap();
        let id = self
            .service
            .add_hashes(
                owner,
                token,
                &AddHashesRequest {
                    session_id: created.session_id,
                    expdate: expires_in.map(|d| self.clock.now_utc() + d),
                    hash,
                    description: "album".into(),
                    captcha_required: false,
                },
            )
            .unwrap();
        (id, created.key)
    }
}

pub trait NowUtc {
    fn now_utc(&self) -> DateTime<Utc>;
}

impl NowUtc for ManualClock {
    fn now_utc(&self) -> DateTime<Utc> {
        ephemera_keyserver::Clock::now(self)
    }
}
