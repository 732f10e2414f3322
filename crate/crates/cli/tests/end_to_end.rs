//! Publish, view and manage images against a real keyserver over HTTP.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use ephemera_cli::bench::sample_photo;
use ephemera_cli::manage::update;
use ephemera_cli::publish::{prepare_plaintext, Embedder, PublishJob};
use ephemera_cli::view::NoSolver;
use ephemera_cli::{
    open_protected, publish, unlock, CliError, FixedAnswer, HttpKeyApi, KeyApi, KeySelector,
    LocalServer,
};
use ephemera_core::jpeg::{encode_to_bytes, parse_jfif, EncodeParams, RasterImage};
use ephemera_core::recompress::{recompress, SiteProfile};
use ephemera_core::stego::{EmbedMode, Protection};
use ephemera_keyserver::api::{Credentials, GetKeyRequest};
use ephemera_keyserver::{ExpiryUpdate, ManualClock, ServerConfig};

fn config() -> ServerConfig {
    ServerConfig {
        pbkdf2_iterations: 10,
        getkey_per_minute: 100_000,
        getkey_range_per_minute: 100_000,
        account_per_minute: 100_000,
        account_range_per_minute: 100_000,
        ..ServerConfig::default()
    }
}

struct World {
    server: LocalServer,
    clock: Arc<ManualClock>,
    api: HttpKeyApi,
    token: String,
    dir: tempfile::TempDir,
}

impl World {
    fn new() -> Self {
        let clock = Arc::new(ManualClock::new(
            Utc.with_ymd_and_hms(2031, 5, 1, 12, 0, 0).unwrap(),
        ));
        let server = LocalServer::start_with_clock(&config(), clock.clone()).unwrap();
        let api = HttpKeyApi::new(&server.url).unwrap();
        let cred = Credentials {
            username: "alice".into(),
            password: "correct horse".into(),
        };
        api.register(&cred).unwrap();
        let token = api.login(&cred).unwrap().token;
        Self {
            server,
            clock,
            api,
            token,
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn photo(&self, name: &str, w: usize, h: usize, seed: u32) -> PathBuf {
        let path = self.dir.path().join(name);
        let bytes = encode_to_bytes(&sample_photo(w, h, seed), &EncodeParams::quality(85)).unwrap();
        std::fs::write(&path, bytes).unwrap();
        path
    }

    fn job(&self, inputs: Vec<PathBuf>, mode: EmbedMode, profile: SiteProfile) -> PublishJob {
        PublishJob {
            inputs,
            expires: Some(self.clock.now_utc() + Duration::days(7)),
            description: "holiday".into(),
            mode,
            profile,
            keyserver_url: self.server.url.clone(),
            captcha_required: false,
            output_dir: self.dir.path().join("out"),
        }
    }

    fn view(&self, path: &Path) -> Result<Vec<u8>, CliError> {
        let opened = open_protected(&std::fs::read(path).unwrap())?;
        unlock(&opened, &self.api, &mut NoSolver)
    }
}

trait NowUtc {
    fn now_utc(&self) -> chrono::DateTime<Utc>;
}

impl NowUtc for ManualClock {
    fn now_utc(&self) -> chrono::DateTime<Utc> {
        use ephemera_keyserver::Clock;
        self.now()
    }
}

fn expected_plaintext(source: &Path, job: &PublishJob) -> Vec<u8> {
    let budget = Embedder::new(&job.profile, job.mode)
        .unwrap()
        .plaintext_budget(&job.keyserver_url);
    prepare_plaintext(&std::fs::read(source).unwrap(), &job.profile, budget).unwrap()
}

#[test]
fn both_modes_round_trip_through_the_keyserver() {
    let w = World::new();
    let src = w.photo("cat.jpg", 640, 480, 3);
    for mode in [EmbedMode::LuminanceBits, EmbedMode::HeaderSegments] {
        let job = w.job(vec![src.clone()], mode, SiteProfile::facebook());
        let report = publish(&job, &w.api, &w.token).unwrap();
        let out = &report.images[0].output;
        let file = parse_jfif(&std::fs::read(out).unwrap()).unwrap();
        assert_eq!((file.width(), file.height()), (720, 720));
        let opened = open_protected(&std::fs::read(out).unwrap()).unwrap();
        let expect = match mode {
            EmbedMode::LuminanceBits => Protection::BitEmbedded,
            EmbedMode::HeaderSegments => Protection::HeaderEmbedded,
        };
        assert_eq!(opened.protection, expect);
        assert_eq!(opened.corrected_symbols, 0);
        assert_eq!(w.view(out).unwrap(), expected_plaintext(&src, &job));
    }
}

#[test]
fn fitting_sources_are_encrypted_unchanged() {
    let w = World::new();
    let src = w.photo("small.jpg", 320, 200, 4);
    let job = w.job(
        vec![src.clone()],
        EmbedMode::LuminanceBits,
        SiteProfile::facebook(),
    );
    let report = publish(&job, &w.api, &w.token).unwrap();
    assert_eq!(
        w.view(&report.images[0].output).unwrap(),
        std::fs::read(&src).unwrap()
    );
}

#[test]
fn large_photo_is_scaled_into_one_cover() {
    let w = World::new();
    let src = w.photo("big.jpg", 3500, 2700, 5);
    assert!(std::fs::metadata(&src).unwrap().len() > 1_000_000);
    let job = w.job(vec![src], EmbedMode::LuminanceBits, SiteProfile::facebook());
    let report = publish(&job, &w.api, &w.token).unwrap();
    assert_eq!(report.images.len(), 1);
    let plain = w.view(&report.images[0].output).unwrap();
    let file = parse_jfif(&plain).unwrap();
    assert_eq!((file.width(), file.height()), (720, 555));
    assert!(
        plain.len()
            <= Embedder::new(&job.profile, job.mode)
                .unwrap()
                .plaintext_budget(&job.keyserver_url)
    );
}

#[test]
fn album_images_share_one_key() {
    let w = World::new();
    let inputs: Vec<PathBuf> = (0..3)
        .map(|i| w.photo(&format!("a{i}.jpg"), 300, 200, 10 + i))
        .collect();
    let job = w.job(
        inputs.clone(),
        EmbedMode::HeaderSegments,
        SiteProfile::facebook(),
    );
    let report = publish(&job, &w.api, &w.token).unwrap();
    assert_eq!(report.images.len(), 3);
    let mut ids: Vec<_> = report.images.iter().map(|i| i.key_id).collect();
    ids.dedup();
    assert_eq!(ids.len(), 3, "one key id per image");
    let keys: Vec<[u8; 32]> = report
        .images
        .iter()
        .map(|img| {
            let k = w
                .api
                .get_key(&GetKeyRequest {
                    key_id: img.key_id,
                    hash: img.ciphertext_hash,
                    captcha: None,
                })
                .unwrap();
            *k.as_bytes()
        })
        .collect();
    assert!(keys.windows(2).all(|p| p[0] == p[1]));
    for (img, src) in report.images.iter().zip(&inputs) {
        assert_eq!(w.view(&img.output).unwrap(), std::fs::read(src).unwrap());
    }
    // no output file carries the key
    for img in &report.images {
        let bytes = std::fs::read(&img.output).unwrap();
        assert!(!bytes.windows(32).any(|win| win == keys[0]));
    }
}

#[test]
fn bit_mode_survives_every_builtin_profile() {
    let w = World::new();
    let src = w.photo("p.jpg", 500, 400, 6);
    for profile in SiteProfile::builtins() {
        let job = w.job(vec![src.clone()], EmbedMode::LuminanceBits, profile.clone());
        let report = publish(&job, &w.api, &w.token).unwrap();
        let uploaded =
            recompress(&std::fs::read(&report.images[0].output).unwrap(), &profile).unwrap();
        let opened = open_protected(&uploaded).unwrap();
        let plain = unlock(&opened, &w.api, &mut NoSolver).unwrap();
        assert_eq!(plain, expected_plaintext(&src, &job), "{}", profile.name);
    }
}

#[test]
fn header_mode_is_lost_to_metadata_stripping() {
    let w = World::new();
    let src = w.photo("h.jpg", 300, 300, 7);
    let job = w.job(
        vec![src],
        EmbedMode::HeaderSegments,
        SiteProfile::facebook(),
    );
    let report = publish(&job, &w.api, &w.token).unwrap();
    let uploaded = recompress(
        &std::fs::read(&report.images[0].output).unwrap(),
        &job.profile,
    )
    .unwrap();
    assert!(matches!(
        open_protected(&uploaded),
        Err(CliError::NotProtected)
    ));
}

#[test]
fn expiry_updates_take_effect_immediately() {
    let w = World::new();
    let src = w.photo("e.jpg", 200, 150, 8);
    let job = w.job(
        vec![src.clone()],
        EmbedMode::HeaderSegments,
        SiteProfile::facebook(),
    );
    let out = publish(&job, &w.api, &w.token).unwrap().images[0]
        .output
        .clone();

    let selector: KeySelector = "holiday".parse().unwrap();
    update(&w.api, &w.token, &selector, ExpiryUpdate::Now).unwrap();
    let err = w.view(&out).unwrap_err();
    assert!(matches!(err, CliError::Expired(_)));
    assert_eq!(err.exit_code(), 2);

    let later = w.clock.now_utc() + Duration::days(1);
    update(&w.api, &w.token, &selector, ExpiryUpdate::At(later)).unwrap();
    assert_eq!(w.view(&out).unwrap(), std::fs::read(&src).unwrap());

    w.clock.advance(Duration::days(2));
    assert!(matches!(w.view(&out), Err(CliError::Expired(_))));
}

#[test]
fn selectors_must_match_exactly_one_key() {
    let w = World::new();
    let src = w.photo("s.jpg", 100, 100, 9);
    publish(
        &w.job(
            vec![src.clone(), src],
            EmbedMode::HeaderSegments,
            SiteProfile::facebook(),
        ),
        &w.api,
        &w.token,
    )
    .unwrap();
    let none: KeySelector = "no such album".parse().unwrap();
    assert!(matches!(
        update(&w.api, &w.token, &none, ExpiryUpdate::Now),
        Err(CliError::NoMatch(_))
    ));
    let both: KeySelector = "holiday".parse().unwrap();
    assert!(matches!(
        update(&w.api, &w.token, &both, ExpiryUpdate::Now),
        Err(CliError::Ambiguous(_, 2))
    ));
    let unknown = KeySelector::Id([0xAB; 16]);
    let err = update(&w.api, &w.token, &unknown, ExpiryUpdate::Now).unwrap_err();
    assert!(matches!(&err, CliError::Api(e) if e.code() == Some("not_found")));
}

fn add_up(prompt: &str) -> Option<String> {
    let sum = prompt
        .trim_start_matches("What is ")
        .trim_end_matches('?')
        .split('+')
        .map(|n| n.trim().parse::<u32>().ok())
        .sum::<Option<u32>>()?;
    Some(sum.to_string())
}

#[test]
fn captcha_is_asked_once_per_album() {
    let w = World::new();
    let inputs: Vec<PathBuf> = (0..2)
        .map(|i| w.photo(&format!("c{i}.jpg"), 100, 100, 20 + i))
        .collect();
    let mut job = w.job(inputs, EmbedMode::HeaderSegments, SiteProfile::facebook());
    job.captcha_required = true;
    let report = publish(&job, &w.api, &w.token).unwrap();
    let first = open_protected(&std::fs::read(&report.images[0].output).unwrap()).unwrap();
    assert!(matches!(
        unlock(&first, &w.api, &mut NoSolver),
        Err(CliError::CaptchaFailed)
    ));
    assert!(matches!(
        unlock(&first, &w.api, &mut FixedAnswer("wrong".into())),
        Err(CliError::CaptchaFailed)
    ));
    let mut asked = 0;
    let mut solver = |p: &str| {
        asked += 1;
        add_up(p)
    };
    unlock(&first, &w.api, &mut solver).unwrap();
    assert_eq!(asked, 1);
    let second = open_protected(&std::fs::read(&report.images[1].output).unwrap()).unwrap();
    unlock(&second, &w.api, &mut NoSolver).unwrap();
}

#[test]
fn tampered_ciphertext_is_refused() {
    let w = World::new();
    let src = w.photo("t.jpg", 100, 100, 30);
    let report = publish(
        &w.job(
            vec![src],
            EmbedMode::HeaderSegments,
            SiteProfile::facebook(),
        ),
        &w.api,
        &w.token,
    )
    .unwrap();
    let mut opened = open_protected(&std::fs::read(&report.images[0].output).unwrap()).unwrap();
    opened.envelope.ciphertext[5] ^= 1;
    let err = unlock(&opened, &w.api, &mut NoSolver).unwrap_err();
    assert!(matches!(&err, CliError::Api(e) if e.code() == Some("hash_mismatch")));
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn plain_photos_are_not_protected() {
    let bytes = encode_to_bytes(&sample_photo(720, 720, 2), &EncodeParams::quality(90)).unwrap();
    let err = open_protected(&bytes).unwrap_err();
    assert!(matches!(err, CliError::NotProtected));
    assert_eq!(err.exit_code(), 3);
    assert!(matches!(
        open_protected(b"not a jpeg"),
        Err(CliError::NotProtected)
    ));
}

#[test]
fn oversized_payload_is_a_capacity_error() {
    let w = World::new();
    let mut tiny = SiteProfile::facebook();
    tiny.name = "tiny".into();
    tiny.max_width = 64;
    tiny.max_height = 100;
    let noise = RasterImage::from_fn(64, 64, |x, y| {
        let v = ((x * 7919 + y * 104_729) % 251) as u8;
        [v, v.wrapping_mul(3), v.wrapping_mul(7)]
    })
    .unwrap();
    let src = w.dir.path().join("noise.jpg");
    std::fs::write(
        &src,
        encode_to_bytes(&noise, &EncodeParams::quality(100)).unwrap(),
    )
    .unwrap();
    let err = publish(
        &w.job(vec![src], EmbedMode::LuminanceBits, tiny),
        &w.api,
        &w.token,
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Capacity { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
    assert!(
        w.api.list_keys(&w.token).unwrap().is_empty(),
        "nothing registered on failure"
    );
}

#[test]
fn command_line_workflow() {
    let w = World::new();
    let src = w.photo("cli.jpg", 400, 300, 40);
    let out_dir = w.dir.path().join("cli-out");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_ephemera"))
            .args(args)
            .env("EPHEMERA_KEYSERVER", &w.server.url)
            .env("EPHEMERA_USER", "bob")
            .env("EPHEMERA_PASSWORD", "hunter22 hunter22")
            .current_dir(w.dir.path())
            .output()
            .unwrap()
    };
    assert!(run(&["account", "register"]).status.success());
    let expires = (w.clock.now_utc() + Duration::days(3)).to_rfc3339();
    let publish_out = run(&[
        "publish",
        "--expires",
        &expires,
        "--description",
        "cli album",
        "--mode",
        "bits",
        "--profile",
        "facebook",
        "-o",
        out_dir.to_str().unwrap(),
        src.to_str().unwrap(),
    ]);
    assert!(
        publish_out.status.success(),
        "{}",
        String::from_utf8_lossy(&publish_out.stderr)
    );
    let protected = out_dir.join("cli.ephemera.jpg");
    assert!(protected.exists());

    let listing = run(&["keys", "list"]);
    let listing = String::from_utf8(listing.stdout).unwrap();
    assert!(listing.contains("cli album"), "{listing}");

    let plain = w.dir.path().join("plain.jpg");
    let view = run(&[
        "view",
        protected.to_str().unwrap(),
        "-o",
        plain.to_str().unwrap(),
    ]);
    assert!(
        view.status.success(),
        "{}",
        String::from_utf8_lossy(&view.stderr)
    );
    assert_eq!(std::fs::read(&plain).unwrap(), std::fs::read(&src).unwrap());

    assert!(run(&["update", "--key", "cli album", "--expires", "now"])
        .status
        .success());
    let expired = run(&[
        "view",
        protected.to_str().unwrap(),
        "-o",
        plain.to_str().unwrap(),
    ]);
    assert_eq!(expired.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&expired.stderr).contains("expired"));

    let not_protected = run(&["view", src.to_str().unwrap()]);
    assert_eq!(not_protected.status.code(), Some(3));

    let bad_login = Command::new(env!("CARGO_BIN_EXE_ephemera"))
        .args(["keys", "list"])
        .env("EPHEMERA_KEYSERVER", &w.server.url)
        .env("EPHEMERA_USER", "bob")
        .env("EPHEMERA_PASSWORD", "wrong password")
        .output()
        .unwrap();
    assert_eq!(bad_login.status.code(), Some(5));

    let usage = run(&["publish"]);
    assert_eq!(usage.status.code(), Some(1));
}
