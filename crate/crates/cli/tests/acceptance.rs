//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::net::{IpAddr, Ipv4Addr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use ephemera_cli::bench::{
    bench_source, creation_suite, sample_photo, server_suite, CreationConfig, ServerBenchConfig,
};
use ephemera_cli::publish::Embedder;
use ephemera_cli::{KeyApi, LocalKeyApi, LocalServer};
use ephemera_core::crypto::{
    build_envelope, encrypt, hash, parse_envelope, PayloadEnvelope, SymmetricKey,
    ENVELOPE_FIXED_LEN,
};
use ephemera_core::ecc::{rs_decode, rs_encode, K, N};
use ephemera_core::jpeg::{
    decode_bytes, encode_planes, encode_to_bytes, parse_jfif, serialize_jfif, CodecHooks,
    EncodeParams, Subsampling, YcbcrPlanes,
};
use ephemera_core::recompress::{cancellation_capacity, cancellation_experiment, recompress};
use ephemera_core::recompress::{CancellationArithmetic, SiteProfile};
use ephemera_core::stego::{
    compute_capacity, embed_header, extract_header, extract_message, make_container, EmbedMode,
    StegoError,
};
use ephemera_keyserver::api::{AddHashesRequest, Credentials, GetKeyRequest};
use ephemera_keyserver::{
    Clock, ExpiryUpdate, KeyService, ManualClock, ServerConfig, ServiceError,
};
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn open_limits() -> ServerConfig {
    ServerConfig {
        account_per_minute: u32::MAX,
        account_range_per_minute: u32::MAX,
        getkey_per_minute: u32::MAX,
        getkey_range_per_minute: u32::MAX,
        pbkdf2_iterations: 1_000,
        ..ServerConfig::default()
    }
}

fn random_bytes(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    let mut v = vec![0; len];
    rng.fill_bytes(&mut v);
    v
}

fn recompression_survival() -> Outcome {
    let runs = 100;
    let profile = SiteProfile::facebook();
    let embedder = Embedder::new(&profile, EmbedMode::LuminanceBits).map_err(|e| e.to_string())?;
    let capacity = embedder.envelope_budget();
    let target = capacity * 3 / 4;
    let url = "https://keys.example.org";
    let plaintext_len = (target - ENVELOPE_FIXED_LEN - url.len()) / 16 * 16 - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0usize;
    let mut exact = 0;
    let mut envelope_len = 0;
    let t = Instant::now();
    for _ in 0..runs {
        let key = SymmetricKey::generate();
        let (iv, ciphertext) = encrypt(&key, &random_bytes(&mut rng, plaintext_len));
        let env = PayloadEnvelope {
            keyserver_url: url.into(),
            key_id: rng.gen(),
            iv,
            ciphertext,
        };
        let bytes = build_envelope(&env).map_err(|e| e.to_string())?;
        envelope_len = bytes.len();
        let published = embedder.embed(&bytes).map_err(|e| e.to_string())?;
        let uploaded = recompress(&published, &profile).map_err(|e| e.to_string())?;
        let file = parse_jfif(&uploaded).map_err(|e| e.to_string())?;
        let out = match extract_message(&file) {
            Ok(out) => out,
            Err(_) => continue,
        };
        worst = worst.max(out.report.worst());
        let recovered = parse_envelope(&out.message).map_err(|e| e.to_string())?;
        if hash(&recovered.ciphertext) == hash(&env.ciphertext) {
            exact += 1;
        }
    }
    let elapsed = t.elapsed();
    let rate = worst as f64 / N as f64;
    let detail = format!(
        "envelope {envelope_len}/{capacity} bytes, worst codeword {worst}/{N} symbols ({:.2}%), \
         exact {exact}/{runs}, {:.1} s",
        rate * 100.0,
        elapsed.as_secs_f64()
    );
    check(
        rate <= 0.05 && exact == runs && elapsed < Duration::from_secs(60),
        || detail.clone(),
    )?;
    Ok(detail)
}

fn capacity_arithmetic() -> Outcome {
    // (width, height, image bytes, bytes incl ECC, 3/4 figure, exact 191/255 figure)
    let rows = [
        (720, 720, 468_000, 117_000, 87_750.0, 87_635),
        (1024, 1024, 976_896, 244_224, 183_168.0, 182_928),
        (620, 620, 341_000, 85_250, 63_937.5, 63_853),
    ];
    let mut lines = Vec::new();
    for (w, h, pixels, raw, three_quarters, exact) in rows {
        let cap = compute_capacity(w, h, 70).map_err(|e| e.to_string())?;
        let line = format!(
            "{w}x{h}: {}/{} bytes, 3/4 rate {}, 191/255 rate {} (whole codewords {})",
            cap.usable_pixels,
            cap.raw_bytes,
            cap.three_quarter_rate_bytes(),
            cap.payload_bytes_after_ecc,
            cap.codeword_payload_bytes()
        );
        check(
            cap.usable_pixels == pixels
                && cap.raw_bytes == raw
                && cap.three_quarter_rate_bytes() == three_quarters
                && cap.payload_bytes_after_ecc == exact,
            || line.clone(),
        )?;
        lines.push(line);
    }
    Ok(lines.join("; "))
}

fn rs_bound() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corrupt = |cw: &mut [u8; N], errors: usize, rng: &mut ChaCha8Rng| {
        for pos in sample(rng, N, errors) {
            cw[pos] ^= rng.gen_range(1..=255u8);
        }
    };
    for trial in 0..10_000 {
        let data = random_bytes(&mut rng, K);
        let mut cw = rs_encode(&data).map_err(|e| e.to_string())?;
        corrupt(&mut cw, 32, &mut rng);
        let ok = matches!(rs_decode(&cw), Ok((out, 32)) if out[..] == data[..]);
        check(ok, || format!("32-error trial {trial} not recovered"))?;
    }
    let (mut detected, mut decoded, mut miscorrected, mut passed_hash) = (0, 0, 0, 0);
    for _ in 0..1_000 {
        let data = random_bytes(&mut rng, K);
        let digest = hash(&data);
        let mut cw = rs_encode(&data).map_err(|e| e.to_string())?;
        let errors = rng.gen_range(33..=N / 2);
        corrupt(&mut cw, errors, &mut rng);
        match rs_decode(&cw) {
            Err(_) => detected += 1,
            Ok((out, _)) if out[..] == data[..] => decoded += 1,
            Ok((out, _)) => {
                miscorrected += 1;
                if hash(&out) == digest {
                    passed_hash += 1;
                }
            }
        }
    }
    let elapsed = t.elapsed();
    let detail = format!(
        "10000/10000 at 32 errors; 33+ errors: {detected} detected, {decoded} decoded correctly, {miscorrected} miscorrected, \
         {passed_hash} passed the hash check; {:.1} s",
        elapsed.as_secs_f64()
    );
    check(
        passed_hash == 0 && elapsed < Duration::from_secs(30),
        || detail.clone(),
    )?;
    Ok(detail)
}

fn cancellation() -> Outcome {
    let profile = SiteProfile::facebook();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let len = cancellation_capacity(&profile).min(64 * 1024);
    let payload = random_bytes(&mut rng, len);
    let exact = cancellation_experiment(&payload, &profile, CancellationArithmetic::Exact);
    let rounded =
        cancellation_experiment(&payload, &profile, CancellationArithmetic::IntegerRounded);
    let detail = format!(
        "{} bytes: exact BER {:.4}, integer-rounded BER {:.4}",
        len, exact.ber, rounded.ber
    );
    check(exact.ber == 0.0 && rounded.ber > 0.10, || detail.clone())?;
    Ok(detail)
}

fn header_contrast() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let payload = random_bytes(&mut rng, 300 * 1024);
    let planes = YcbcrPlanes::from_rgb(
        &make_container(720, 720, "header test").map_err(|e| e.to_string())?,
        Subsampling::Chroma420,
    );
    let plain = encode_planes(&planes, &EncodeParams::quality(85), &mut CodecHooks::none())
        .map_err(|e| e.to_string())?;
    let tagged = embed_header(&plain, &payload).map_err(|e| e.to_string())?;
    check(tagged.scans == plain.scans, || "pixel data changed".into())?;
    let bytes = serialize_jfif(&tagged).map_err(|e| e.to_string())?;
    let back = extract_header(&parse_jfif(&bytes).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    check(back == payload, || "header payload changed".into())?;
    let uploaded = recompress(&bytes, &SiteProfile::facebook()).map_err(|e| e.to_string())?;
    let after = extract_header(&parse_jfif(&uploaded).map_err(|e| e.to_string())?);
    check(matches!(after, Err(StegoError::NotProtected)), || {
        format!("after recompression: {after:?}")
    })?;
    Ok(format!(
        "{} bytes round-trip exactly; NotProtected after recompression",
        payload.len()
    ))
}

fn expiry_safety() -> Outcome {
    let clock = Arc::new(ManualClock::new(
        Utc.with_ymd_and_hms(2031, 5, 1, 12, 0, 0).unwrap(),
    ));
    let mut config = open_limits();
    config.pbkdf2_iterations = 10;
    let service = KeyService::new(&config, clock.clone()).map_err(|e| e.to_string())?;
    let ip = IpAddr::V4(Ipv4Addr::new(198, 51, 100, 4));
    let cred = Credentials {
        username: "owner".into(),
        password: "expiry fuzz password".into(),
    };
    service.register(ip, &cred).map_err(|e| e.to_string())?;
    let login = |s: &KeyService| {
        s.login(ip, &cred)
            .map(|r| r.token)
            .map_err(|e| e.to_string())
    };
    let token = login(&service)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    struct Rec {
        id: [u8; 16],
        hash: [u8; 32],
        key: [u8; 32],
        expdate: chrono::DateTime<Utc>,
    }
    let mut records = Vec::new();
    for _ in 0..8 {
        let created = service.create_key(ip, &token).map_err(|e| e.to_string())?;
        let expdate = clock.now() + chrono::Duration::seconds(rng.gen_range(1..3600));
        let h: [u8; 32] = rng.gen();
        let id = service
            .add_hashes(
                ip,
                &token,
                &AddHashesRequest {
                    session_id: created.session_id,
                    expdate: Some(expdate),
                    hash: h,
                    description: "fuzz".into(),
                    captcha_required: false,
                },
            )
            .map_err(|e| e.to_string())?;
        records.push(Rec {
            id,
            hash: h,
            key: created.key,
            expdate,
        });
    }

    let (mut released, mut refused, mut instant) = (0, 0, 0);
    let get = |r: &Rec| {
        service.get_key(
            ip,
            &GetKeyRequest {
                key_id: r.id,
                hash: r.hash,
                captcha: None,
            },
        )
    };
    for op in 0..1_000 {
        let i = rng.gen_range(0..records.len());
        match rng.gen_range(0..10) {
            0..=2 => clock.advance(chrono::Duration::seconds(rng.gen_range(0..600))),
            3..=4 => {
                let token = login(&service)?;
                let update = if rng.gen_bool(0.3) {
                    ExpiryUpdate::Now
                } else {
                    ExpiryUpdate::At(
                        clock.now() + chrono::Duration::seconds(rng.gen_range(-1800..3600)),
                    )
                };
                let when = service
                    .update_expiration(ip, &token, &records[i].id, update)
                    .map_err(|e| e.to_string())?;
                records[i].expdate = when;
                if update == ExpiryUpdate::Now {
                    let next = get(&records[i]);
                    check(matches!(next, Err(ServiceError::Expired)), || {
                        format!("op {op}: get_key right after instant expiry gave {next:?}")
                    })?;
                    instant += 1;
                }
            }
            _ => {
                let now = clock.now();
                match get(&records[i]) {
                    Ok(key) => {
                        check(records[i].expdate > now, || {
                            format!(
                                "op {op}: key released {} after expiry",
                                now - records[i].expdate
                            )
                        })?;
                        check(*key.as_bytes() == records[i].key, || {
                            format!("op {op}: wrong key")
                        })?;
                        released += 1;
                    }
                    Err(ServiceError::Expired) => {
                        check(records[i].expdate <= now, || {
                            format!("op {op}: refused a live key")
                        })?;
                        refused += 1;
                    }
                    Err(e) => return Err(format!("op {op}: {e}")),
                }
            }
        }
    }
    Ok(format!(
        "1000 operations: {released} released, {refused} refused as expired, \
         {instant} instant expiries checked"
    ))
}

fn server_scale() -> Outcome {
    let load = LocalServer::start(&open_limits()).map_err(|e| e.to_string())?;
    let limited = LocalServer::start(&ServerConfig {
        pbkdf2_iterations: 1_000,
        ..ServerConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let cfg = ServerBenchConfig {
        duration: Duration::from_secs(5),
        ..ServerBenchConfig::default()
    };
    let r = server_suite(&load.url, &limited.url, &cfg).map_err(|e| e.to_string())?;
    let o = &r.overload;
    let detail = format!(
        "{} sessions ({} failed, {} live), {:.0} get_key/s over {:.1} s ({} failed); overload: \
         {} sent, {} granted, {} limited, {} without Retry-After, {} other, healthy after: {}",
        r.sessions_created,
        r.session_failures,
        r.peak_live_sessions,
        r.get_key_per_sec(),
        r.elapsed.as_secs_f64(),
        r.get_key_failed,
        o.sent,
        o.granted,
        o.limited,
        o.missing_retry_after,
        o.other,
        o.healthy_after
    );
    check(
        r.peak_live_sessions >= 10_000
            && r.session_failures == 0
            && r.get_key_failed == 0
            && r.get_key_per_sec() >= 500.0
            && o.limited > 0
            && o.missing_retry_after == 0
            && o.other == 0
            && o.healthy_after,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn creation_linearity() -> Outcome {
    let service = KeyService::new(&open_limits(), Arc::new(ephemera_keyserver::SystemClock))
        .map_err(|e| e.to_string())?;
    let api = LocalKeyApi::new(Arc::new(service), IpAddr::V4(Ipv4Addr::LOCALHOST));
    let cred = Credentials {
        username: "bench".into(),
        password: "bench-password".into(),
    };
    api.register(&cred).map_err(|e| e.to_string())?;
    let token = api.login(&cred).map_err(|e| e.to_string())?.token;
    let cfg = CreationConfig {
        max_images: 50,
        reps: 50,
        profile: SiteProfile::facebook(),
        keyserver_url: "local:".into(),
    };
    let source = bench_source(&cfg.profile, &cfg.keyserver_url).map_err(|e| e.to_string())?;
    let r = creation_suite(&cfg, &api, &token, &source).map_err(|e| e.to_string())?;
    let detail = format!(
        "bits {:.2} ms/image R² {:.4}; header {:.3} ms/image R² {:.4}; header faster at every count: {}",
        r.bits_fit.slope * 1e3,
        r.bits_fit.r_squared,
        r.header_fit.slope * 1e3,
        r.header_fit.r_squared,
        r.header_always_faster()
    );
    check(
        r.bits_fit.r_squared >= 0.98 && r.header_fit.r_squared >= 0.98 && r.header_always_faster(),
        || detail.clone(),
    )?;
    Ok(detail)
}

/// Largest per-sample gap between our decoder and libjpeg.
fn libjpeg_gap(bytes: &[u8]) -> Result<u8, String> {
    let ours = decode_bytes(bytes).map_err(|e| e.to_string())?;
    let reference = ephemera_refjpeg::decode(bytes)?;
    if (reference.width, reference.height) != (ours.width(), ours.height())
        || reference.rgb.len() != ours.as_bytes().len()
    {
        return Err(format!(
            "dimensions {}x{} vs {}x{}",
            ours.width(),
            ours.height(),
            reference.width,
            reference.height
        ));
    }
    Ok(ours
        .as_bytes()
        .iter()
        .zip(&reference.rgb)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0))
}

fn interoperability() -> Outcome {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for (i, (w, h)) in [(8, 8), (97, 61), (640, 480)].into_iter().enumerate() {
        let img = sample_photo(w, h, i as u32);
        for q in [10u8, 50, 75, 95, 100] {
            for sub in [Subsampling::None, Subsampling::Chroma420] {
                let mut p = EncodeParams::quality(q);
                p.subsampling = sub;
                let bytes = encode_to_bytes(&img, &p).map_err(|e| e.to_string())?;
                files.push((format!("{w}x{h} q{q} {sub:?}"), bytes));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for profile in SiteProfile::builtins() {
        for mode in [EmbedMode::LuminanceBits, EmbedMode::HeaderSegments] {
            let embedder = Embedder::new(&profile, mode).map_err(|e| e.to_string())?;
            let key = SymmetricKey::generate();
            let (iv, ciphertext) = encrypt(&key, &random_bytes(&mut rng, 20_000));
            let env = build_envelope(&PayloadEnvelope {
                keyserver_url: "https://keys.example.org".into(),
                key_id: rng.gen(),
                iv,
                ciphertext,
            })
            .map_err(|e| e.to_string())?;
            let cover = embedder.embed(&env).map_err(|e| e.to_string())?;
            let uploaded = recompress(&cover, &profile).map_err(|e| e.to_string())?;
            files.push((format!("{} {mode:?} cover", profile.name), cover));
            files.push((format!("{} {mode:?} recompressed", profile.name), uploaded));
        }
    }
    let mut worst = 0;
    for (name, bytes) in &files {
        let gap = libjpeg_gap(bytes).map_err(|e| format!("{name}: {e}"))?;
        check(gap <= 1, || format!("{name}: libjpeg differs by {gap}"))?;
        worst = worst.max(gap);
    }

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/corpus");
    let mut corpus: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jpg"))
        .collect();
    corpus.sort();
    check(corpus.len() == 20, || {
        format!("corpus has {} files", corpus.len())
    })?;
    let mut corpus_worst = 0;
    for path in &corpus {
        let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
        let gap = libjpeg_gap(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        check(gap <= 1, || format!("{}: differs by {gap}", path.display()))?;
        corpus_worst = corpus_worst.max(gap);
    }
    Ok(format!(
        "{} encoded files max diff {worst}; {} corpus files max diff {corpus_worst}",
        files.len(),
        corpus.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("recompression survival", recompression_survival),
        ("capacity arithmetic", capacity_arithmetic),
        ("RS(255,191) bound", rs_bound),
        ("cancellation negative result", cancellation),
        ("header path contrast", header_contrast),
        ("expiry safety", expiry_safety),
        ("server scale", server_scale),
        ("creation-time linearity", creation_linearity),
        ("codec interoperability", interoperability),
    ];
    let only: Option<usize> = std::env::var("EPHEMERA_CRITERION")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n} {name}: PASS ({d}) [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({d}) [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
