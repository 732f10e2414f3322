//! Protocol behaviour of the key service with an injected clock.

mod common;

use chrono::Duration;
use common::*;
use ephemera_keyserver::api::{AddHashesRequest, CaptchaAnswer, ExpiryUpdate, GetKeyRequest};
use ephemera_keyserver::{ServerConfig, ServiceError};
use rand::{Rng, SeedableRng};

fn get(f: &Fixture, id: [u8; 16], hash: [u8; 32]) -> Result<[u8; 32], ServiceError> {
    f.service
        .get_key(
            ip("203.0.113.7"),
            &GetKeyRequest {
                key_id: id,
                hash,
                captcha: None,
            },
        )
        .map(|k| *k.as_bytes())
}

#[test]
fn create_key_requires_valid_credentials() {
    let f = fixture();
    assert!(matches!(
        f.service.create_key(ip("10.0.0.1"), "bogus"),
        Err(ServiceError::Auth)
    ));
    assert!(matches!(
        f.service.login(ip("10.0.0.1"), &cred("nobody")),
        Err(ServiceError::Auth)
    ));
    let token = f.account("alice");
    let a = f.service.create_key(ip("10.0.0.1"), &token).unwrap();
    let b = f.service.create_key(ip("10.0.0.1"), &token).unwrap();
    assert_ne!(a.key, b.key);
    assert_ne!(a.session_id, b.session_id);
    assert!(!a.session_id.is_empty());
}

#[test]
fn wrong_password_is_an_auth_error() {
    let f = fixture();
    f.account("alice");
    let mut bad = cred("alice");
    bad.password.push('!');
    assert!(matches!(
        f.service.login(ip("10.0.0.1"), &bad),
        Err(ServiceError::Auth)
    ));
}

#[test]
fn duplicate_registration_rejected() {
    let f = fixture();
    f.account("alice");
    assert!(matches!(
        f.service.register(ip("10.0.0.1"), &cred("alice")),
        Err(ServiceError::UsernameTaken)
    ));
}

#[test]
fn happy_path_releases_key_only_for_matching_hash() {
    let f = fixture();
    let token = f.account("alice");
    let (id, key) = f.publish(&token, [7; 32], Some(Duration::days(1)));
    assert_eq!(get(&f, id, [7; 32]).unwrap(), key);
    assert!(matches!(
        get(&f, id, [8; 32]),
        Err(ServiceError::HashMismatch)
    ));
    assert!(matches!(
        get(&f, [0; 16], [7; 32]),
        Err(ServiceError::NotFound)
    ));
}

#[test]
fn one_session_many_hashes_share_the_key() {
    let f = fixture();
    let token = f.account("alice");
    let src = ip("10.0.0.1");
    let created = f.service.create_key(src, &token).unwrap();
    let ids: Vec<[u8; 16]> = (0..3u8)
        .map(|i| {
            f.service
                .add_hashes(
                    src,
                    &token,
                    &AddHashesRequest {
                        session_id: created.session_id.clone(),
                        expdate: None,
                        hash: [i; 32],
                        description: "trip".into(),
                        captcha_required: false,
                    },
                )
                .unwrap()
        })
        .collect();
    assert_eq!(ids.len(), 3);
    assert_ne!(ids[0], ids[1]);
    for (i, id) in ids.iter().enumerate() {
        assert_eq!(get(&f, *id, [i as u8; 32]).unwrap(), created.key);
    }
    // Each hash is bound to its own record.
    assert!(matches!(
        get(&f, ids[0], [1; 32]),
        Err(ServiceError::HashMismatch)
    ));
}

#[test]
fn sessions_expire_after_fifteen_minutes() {
    let f = fixture();
    let token = f.account("alice");
    let src = ip("10.0.0.1");
    let created = f.service.create_key(src, &token).unwrap();
    f.clock.advance(Duration::minutes(15));
    let req = AddHashesRequest {
        session_id: created.session_id,
        expdate: None,
        hash: [1; 32],
        description: "late".into(),
        captcha_required: false,
    };
    assert!(matches!(
        f.service.add_hashes(src, &token, &req),
        Err(ServiceError::SessionExpired)
    ));
    assert_eq!(f.service.live_sessions(), 0);
}

#[test]
fn sessions_belong_to_their_creator() {
    let f = fixture();
    let alice = f.account("alice");
    let mallory = f.account("mallory");
    let src = ip("10.0.0.1");
    let created = f.service.create_key(src, &alice).unwrap();
    let req = AddHashesRequest {
        session_id: created.session_id,
        expdate: None,
        hash: [1; 32],
        description: "x".into(),
        captcha_required: false,
    };
    assert!(matches!(
        f.service.add_hashes(src, &mallory, &req),
        Err(ServiceError::SessionExpired)
    ));
}

#[test]
fn past_publish_dates_are_invalid() {
    let f = fixture();
    let token = f.account("alice");
    let src = ip("10.0.0.1");
    let created = f.service.create_key(src, &token).unwrap();
    let req = AddHashesRequest {
        session_id: created.session_id,
        expdate: Some(t0() - Duration::seconds(1)),
        hash: [1; 32],
        description: "x".into(),
        captcha_required: false,
    };
    assert!(matches!(
        f.service.add_hashes(src, &token, &req),
        Err(ServiceError::InvalidDate(_))
    ));
}

#[test]
fn expiry_is_checked_before_the_hash() {
    let f = fixture();
    let token = f.account("alice");
    let (id, _) = f.publish(&token, [7; 32], Some(Duration::hours(1)));
    f.clock.advance(Duration::hours(1));
    assert!(matches!(get(&f, id, [9; 32]), Err(ServiceError::Expired)));
    assert!(matches!(get(&f, id, [7; 32]), Err(ServiceError::Expired)));
}

#[test]
fn unset_expiry_never_expires_until_updated() {
    let f = fixture();
    let token = f.account("alice");
    let (id, key) = f.publish(&token, [7; 32], None);
    f.clock.advance(Duration::days(3650));
    assert_eq!(get(&f, id, [7; 32]).unwrap(), key);
    // The login token has long lapsed by now.
    assert!(matches!(
        f.service.authenticate(&token),
        Err(ServiceError::Auth)
    ));
    let token = f
        .service
        .login(ip("10.0.0.1"), &cred("alice"))
        .unwrap()
        .token;
    f.service
        .update_expiration(ip("10.0.0.1"), &token, &id, ExpiryUpdate::Now)
        .unwrap();
    assert!(matches!(get(&f, id, [7; 32]), Err(ServiceError::Expired)));
}

#[test]
fn update_shortens_and_prolongs() {
    let f = fixture();
    let token = f.account("alice");
    let src = ip("10.0.0.1");
    let (id, key) = f.publish(&token, [7; 32], Some(Duration::days(1)));
    f.service
        .update_expiration(src, &token, &id, ExpiryUpdate::At(t0() - Duration::days(1)))
        .unwrap();
    assert!(matches!(get(&f, id, [7; 32]), Err(ServiceError::Expired)));
    f.service
        .update_expiration(
            src,
            &token,
            &id,
            ExpiryUpdate::At(t0() + Duration::days(30)),
        )
        .unwrap();
    assert_eq!(get(&f, id, [7; 32]).unwrap(), key);
}

#[test]
fn update_checks_owner_and_existence() {
    let f = fixture();
    let alice = f.account("alice");
    let mallory = f.account("mallory");
    let src = ip("10.0.0.1");
    let (id, _) = f.publish(&alice, [7; 32], None);
    assert!(matches!(
        f.service
            .update_expiration(src, &mallory, &id, ExpiryUpdate::Now),
        Err(ServiceError::NotOwner)
    ));
    assert!(matches!(
        f.service
            .update_expiration(src, &alice, &[3; 16], ExpiryUpdate::Now),
        Err(ServiceError::NotFound)
    ));
    assert!(matches!(
        f.service
            .update_expiration(src, "nope", &id, ExpiryUpdate::Now),
        Err(ServiceError::Auth)
    ));
}

#[test]
fn listing_is_per_owner_and_keyless() {
    let f = fixture();
    let alice = f.account("alice");
    let bob = f.account("bob");
    let src = ip("10.0.0.1");
    assert!(f.service.list_keys(src, &alice).unwrap().is_empty());
    let (id, key) = f.publish(&alice, [7; 32], None);
    let rows = f.service.list_keys(src, &alice).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].key_id, id);
    assert_eq!(rows[0].description, "album");
    assert_eq!(rows[0].created_at, t0());
    assert!(f.service.list_keys(src, &bob).unwrap().is_empty());
    let json = serde_json::to_string(&rows).unwrap();
    assert!(!json.contains(&hex::encode(key)));
}

#[test]
fn captcha_gate_and_album_cache() {
    let f = fixture();
    let token = f.account("alice");
    let owner = ip("10.0.0.1");
    let created = f.service.create_key(owner, &token).unwrap();
    let ids: Vec<[u8; 16]> = (0..2u8)
        .map(|i| {
            f.service
                .add_hashes(
                    owner,
                    &token,
                    &AddHashesRequest {
                        session_id: created.session_id.clone(),
                        expdate: None,
                        hash: [i; 32],
                        description: "party".into(),
                        captcha_required: true,
                    },
                )
                .unwrap()
        })
        .collect();
    let viewer = ip("198.51.100.4");
    let ask = |id, hash, captcha| {
        f.service.get_key(
            viewer,
            &GetKeyRequest {
                key_id: id,
                hash,
                captcha,
            },
        )
    };

    let Err(ServiceError::CaptchaRequired(c1)) = ask(ids[0], [0; 32], None) else {
        panic!("expected a challenge")
    };
    // Wrong answer burns the challenge and yields a new one.
    let answer = |c: &ephemera_keyserver::api::ChallengeView, s: &str| {
        Some(CaptchaAnswer {
            challenge_id: c.challenge_id.clone(),
            solution: s.into(),
        })
    };
    let Err(ServiceError::CaptchaRequired(c2)) = ask(ids[0], [0; 32], answer(&c1, "8")) else {
        panic!("expected a fresh challenge")
    };
    assert_ne!(c1.challenge_id, c2.challenge_id);
    assert!(matches!(
        ask(ids[0], [0; 32], answer(&c1, "7")),
        Err(ServiceError::CaptchaRequired(_))
    ));
    assert_eq!(
        *ask(ids[0], [0; 32], answer(&c2, "7")).unwrap().as_bytes(),
        created.key
    );
    // The rest of the album opens without another challenge, for this viewer only.
    assert_eq!(*ask(ids[1], [1; 32], None).unwrap().as_bytes(), created.key);
    assert!(matches!(
        f.service.get_key(
            ip("198.51.100.5"),
            &GetKeyRequest {
                key_id: ids[1],
                hash: [1; 32],
                captcha: None
            }
        ),
        Err(ServiceError::CaptchaRequired(_))
    ));
    // Hash is still checked before the CAPTCHA.
    assert!(matches!(
        ask(ids[1], [9; 32], None),
        Err(ServiceError::HashMismatch)
    ));
}

#[test]
fn verify_endpoint_is_single_use() {
    let f = fixture();
    let token = f.account("alice");
    let owner = ip("10.0.0.1");
    let created = f.service.create_key(owner, &token).unwrap();
    let id = f
        .service
        .add_hashes(
            owner,
            &token,
            &AddHashesRequest {
                session_id: created.session_id,
                expdate: None,
                hash: [4; 32],
                description: "d".into(),
                captcha_required: true,
            },
        )
        .unwrap();
    let viewer = ip("198.51.100.4");
    let req = GetKeyRequest {
        key_id: id,
        hash: [4; 32],
        captcha: None,
    };
    let Err(ServiceError::CaptchaRequired(c)) = f.service.get_key(viewer, &req) else {
        panic!()
    };
    assert!(f
        .service
        .verify_captcha(viewer, &c.challenge_id, "7")
        .unwrap());
    assert!(!f
        .service
        .verify_captcha(viewer, &c.challenge_id, "7")
        .unwrap());
    assert!(f.service.get_key(viewer, &req).is_ok());
}

#[test]
fn get_key_is_rate_limited_per_address_and_range() {
    let f = fixture();
    let token = f.account("alice");
    let (id, _) = f.publish(&token, [7; 32], None);
    let req = GetKeyRequest {
        key_id: id,
        hash: [7; 32],
        captcha: None,
    };
    for _ in 0..60 {
        f.service.get_key(ip("192.0.2.1"), &req).unwrap();
    }
    let Err(ServiceError::RateLimited { retry_after_secs }) =
        f.service.get_key(ip("192.0.2.1"), &req)
    else {
        panic!("expected rate limiting")
    };
    assert_eq!(retry_after_secs, 1);
    f.clock.advance(Duration::seconds(1));
    assert!(f.service.get_key(ip("192.0.2.1"), &req).is_ok());

    // 600 per /24, of which 61 are spent and 10 refilled during the second.
    let mut granted = 0;
    for host in 2..=20 {
        for _ in 0..60 {
            if f.service
                .get_key(ip(&format!("192.0.2.{host}")), &req)
                .is_ok()
            {
                granted += 1;
            }
        }
    }
    assert_eq!(granted, 600 - 61 + 10);
    assert!(f.service.get_key(ip("192.0.3.1"), &req).is_ok());
}

#[test]
fn records_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServerConfig {
        store_path: Some(dir.path().join("keys.jsonl")),
        master_key: Some("11".repeat(32)),
        ..test_config()
    };
    let (id, key) = {
        let f = fixture_with(config.clone());
        let token = f.account("alice");
        f.publish(&token, [5; 32], Some(Duration::days(2)))
    };
    let f = fixture_with(config);
    assert_eq!(get(&f, id, [5; 32]).unwrap(), key);
    let token = f
        .service
        .login(ip("10.0.0.1"), &cred("alice"))
        .unwrap()
        .token;
    assert_eq!(
        f.service.list_keys(ip("10.0.0.1"), &token).unwrap().len(),
        1
    );
}

/// Random interleavings of reads, updates and clock moves never release a
/// key after its expiration.
#[test]
fn fuzzed_expiry_safety() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let f = fixture_with(ServerConfig {
        getkey_per_minute: 1_000_000,
        getkey_range_per_minute: 1_000_000,
        account_per_minute: 1_000_000,
        account_range_per_minute: 1_000_000,
        ..test_config()
    });
    let token = f.account("alice");
    let keys: Vec<([u8; 16], [u8; 32], [u8; 32])> = (0..5u8)
        .map(|i| {
            let (id, key) = f.publish(
                &token,
                [i; 32],
                Some(Duration::minutes(rng.gen_range(1..60))),
            );
            (id, key, [i; 32])
        })
        .collect();
    let src = ip("10.0.0.1");
    let mut released = 0;
    for _ in 0..1000 {
        let (id, key, hash) = keys[rng.gen_range(0..keys.len())];
        match rng.gen_range(0..4) {
            0 => f.clock.advance(Duration::seconds(rng.gen_range(0..300))),
            1 => {
                let update = if rng.gen_bool(0.3) {
                    ExpiryUpdate::Now
                } else {
                    ExpiryUpdate::At(
                        f.clock.now_utc() + Duration::seconds(rng.gen_range(-600..600)),
                    )
                };
                let when = f
                    .service
                    .update_expiration(src, &token, &id, update)
                    .unwrap();
                if when <= f.clock.now_utc() {
                    assert!(matches!(get(&f, id, hash), Err(ServiceError::Expired)));
                }
            }
            _ => {
                let now = f.clock.now_utc();
                let expdate = f
                    .service
                    .list_keys(src, &token)
                    .unwrap()
                    .into_iter()
                    .find(|r| r.key_id == id)
                    .unwrap()
                    .expdate
                    .unwrap();
                match get(&f, id, hash) {
                    Ok(k) => {
                        assert!(
                            expdate > now,
                            "key released at {now} after expiry {expdate}"
                        );
                        assert_eq!(k, key);
                        released += 1;
                    }
                    Err(ServiceError::Expired) => assert!(expdate <= now),
                    Err(e) => panic!("unexpected {e}"),
                }
            }
        }
    }
    assert!(released > 0);
}
