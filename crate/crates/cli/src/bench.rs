//! Timing harnesses: publishing, viewing and keyserver load.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{Duration as ChronoDuration, Utc};
use ephemera_core::crypto::hash;
use ephemera_core::jpeg::{encode_to_bytes, EncodeParams, RasterImage};
use ephemera_core::recompress::{recompress, SiteProfile};
use ephemera_core::stego::EmbedMode;
use ephemera_keyserver::api::{AddHashesRequest, Credentials, GetKeyRequest};
use rand::RngCore;

use crate::api::{HttpKeyApi, KeyApi};
use crate::error::CliError;
use crate::publish::{prepare_plaintext, publish, Embedder, PublishJob};
use crate::view::{open_protected, unlock, NoSolver};

/// Least-squares line through `(x, y)` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// A deterministic photo-like test image: smooth shading plus texture.
pub fn sample_photo(width: usize, height: usize, seed: u32) -> RasterImage {
    RasterImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f32 / width as f32, y as f32 / height as f32);
        let mut h =
            (x as u32).wrapping_mul(0x9E37_79B1) ^ (y as u32).wrapping_mul(0x85EB_CA77) ^ seed;
        h ^= h >> 15;
        h = h.wrapping_mul(0x2C1B_3C6D);
        h ^= h >> 12;
        let grain = (h & 0x0F) as f32 - 7.5;
        let wave = ((fx * 9.0 + seed as f32).sin() * (fy * 7.0).cos()) * 40.0;
        let r = 90.0 + 120.0 * fx + wave + grain;
        let g = 60.0 + 100.0 * fy - wave * 0.5 + grain;
        let b = 150.0 - 80.0 * fx * fy + wave * 0.3 + grain;
        [r, g, b].map(|v| v.clamp(0.0, 255.0) as u8)
    })
    .expect("valid dimensions")
}

/// A source JPEG already sized for `profile`, as the benches publish it.
pub fn bench_source(profile: &SiteProfile, url: &str) -> Result<Vec<u8>, CliError> {
    let w = profile.max_width;
    let h = profile.max_height * 3 / 4;
    let raw = encode_to_bytes(&sample_photo(w, h, 1), &EncodeParams::quality(80))?;
    let budget = Embedder::new(profile, EmbedMode::LuminanceBits)?.plaintext_budget(url);
    prepare_plaintext(&raw, profile, budget)
}

#[derive(Clone, Debug)]
pub struct CreationConfig {
    pub max_images: usize,
    pub reps: usize,
    pub profile: SiteProfile,
    pub keyserver_url: String,
}

#[derive(Clone, Copy, Debug)]
pub struct CreationRow {
    pub images: usize,
    /// Mean wall time of one publish of `images` images.
    pub bits: Duration,
    pub header: Duration,
}

#[derive(Clone, Debug)]
pub struct CreationReport {
    pub rows: Vec<CreationRow>,
    pub bits_fit: LinearFit,
    pub header_fit: LinearFit,
}

impl CreationReport {
    pub fn header_always_faster(&self) -> bool {
        self.rows.iter().all(|r| r.header < r.bits)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("images  bits (ms)  header (ms)\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:>6}  {:>9.2}  {:>11.2}\n",
                r.images,
                r.bits.as_secs_f64() * 1e3,
                r.header.as_secs_f64() * 1e3
            ));
        }
        for (name, f) in [("bits", self.bits_fit), ("header", self.header_fit)] {
            s.push_str(&format!(
                "{name}: {:.3} ms/image + {:.3} ms, R^2 = {:.4}\n",
                f.slope * 1e3,
                f.intercept * 1e3,
                f.r_squared
            ));
        }
        s
    }
}

fn job(inputs: Vec<PathBuf>, mode: EmbedMode, cfg: &CreationConfig, out: PathBuf) -> PublishJob {
    PublishJob {
        inputs,
        expires: Some(Utc::now() + ChronoDuration::days(30)),
        description: format!("bench {mode:?}"),
        mode,
        profile: cfg.profile.clone(),
        keyserver_url: cfg.keyserver_url.clone(),
        captcha_required: false,
        output_dir: out,
    }
}

/// Time publishing 1..=max_images images in both modes, `reps` times each.
/// Counts and modes are interleaved so drift hits both equally.
pub fn creation_suite(
    cfg: &CreationConfig,
    api: &dyn KeyApi,
    token: &str,
    source: &[u8],
) -> Result<CreationReport, CliError> {
    let dir = tempfile::tempdir().map_err(|e| CliError::io("temporary directory", e))?;
    let input = dir.path().join("source.jpg");
    std::fs::write(&input, source).map_err(|e| CliError::io(&input, e))?;
    let out = dir.path().join("out");
    // first use builds the covers; keep that out of the timings
    for mode in [EmbedMode::LuminanceBits, EmbedMode::HeaderSegments] {
        publish(
            &job(vec![input.clone()], mode, cfg, out.clone()),
            api,
            token,
        )?;
    }
    let mut totals = vec![(Duration::ZERO, Duration::ZERO); cfg.max_images];
    for _ in 0..cfg.reps {
        for n in 1..=cfg.max_images {
            for mode in [EmbedMode::LuminanceBits, EmbedMode::HeaderSegments] {
                let j = job(vec![input.clone(); n], mode, cfg, out.clone());
                let t = Instant::now();
                publish(&j, api, token)?;
                let dt = t.elapsed();
                match mode {
                    EmbedMode::LuminanceBits => totals[n - 1].0 += dt,
                    EmbedMode::HeaderSegments => totals[n - 1].1 += dt,
                }
            }
        }
    }
    let reps = cfg.reps.max(1) as u32;
    let rows: Vec<CreationRow> = totals
        .iter()
        .enumerate()
        .map(|(i, (b, h))| CreationRow {
            images: i + 1,
            bits: *b / reps,
            header: *h / reps,
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.images as f64).collect();
    let fit = |f: fn(&CreationRow) -> Duration| {
        linear_fit(
            &xs,
            &rows.iter().map(|r| f(r).as_secs_f64()).collect::<Vec<_>>(),
        )
    };
    Ok(CreationReport {
        bits_fit: fit(|r| r.bits),
        header_fit: fit(|r| r.header),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct ExtractionReport {
    pub reps: usize,
    /// Mean time to detect, extract, fetch the key and decrypt one image.
    pub bits: Duration,
    pub bits_recompressed: Duration,
    pub header: Duration,
}

impl ExtractionReport {
    pub fn table(&self) -> String {
        format!(
            "path                  ms/image\nbits                  {:>8.2}\nbits after recompress {:>8.2}\nheader                {:>8.2}\n",
            self.bits.as_secs_f64() * 1e3,
            self.bits_recompressed.as_secs_f64() * 1e3,
            self.header.as_secs_f64() * 1e3
        )
    }
}

/// Time viewing one protected image per path. Every run checks that the
/// recovered bytes equal the published plaintext.
pub fn extraction_suite(
    cfg: &CreationConfig,
    api: &dyn KeyApi,
    token: &str,
    source: &[u8],
) -> Result<ExtractionReport, CliError> {
    let dir = tempfile::tempdir().map_err(|e| CliError::io("temporary directory", e))?;
    let input = dir.path().join("source.jpg");
    std::fs::write(&input, source).map_err(|e| CliError::io(&input, e))?;
    let mut protected = Vec::new();
    for mode in [EmbedMode::LuminanceBits, EmbedMode::HeaderSegments] {
        let report = publish(
            &job(vec![input.clone()], mode, cfg, dir.path().join("out")),
            api,
            token,
        )?;
        let out = &report.images[0].output;
        protected.push(std::fs::read(out).map_err(|e| CliError::io(out, e))?);
    }
    let recompressed = recompress(&protected[0], &cfg.profile)?;
    let expected = hash(source);
    let time = |bytes: &[u8]| -> Result<Duration, CliError> {
        let t = Instant::now();
        for _ in 0..cfg.reps {
            let opened = open_protected(bytes)?;
            let plain = unlock(&opened, api, &mut NoSolver)?;
            if hash(&plain) != expected {
                return Err(CliError::Corrupted("recovered image differs".into()));
            }
        }
        Ok(t.elapsed() / cfg.reps.max(1) as u32)
    };
    Ok(ExtractionReport {
        reps: cfg.reps,
        bits: time(&protected[0])?,
        bits_recompressed: time(&recompressed)?,
        header: time(&protected[1])?,
    })
}

#[derive(Clone, Debug)]
pub struct ServerBenchConfig {
    pub sessions: usize,
    pub records: usize,
    pub concurrency: usize,
    pub duration: Duration,
    pub overload_requests: usize,
}

impl Default for ServerBenchConfig {
    fn default() -> Self {
        Self {
            sessions: 10_000,
            records: 100,
            concurrency: 8,
            duration: Duration::from_secs(10),
            overload_requests: 300,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OverloadReport {
    pub sent: usize,
    pub granted: usize,
    pub limited: usize,
    /// Limited responses that lacked a Retry-After header.
    pub missing_retry_after: usize,
    /// Anything other than 200 or 429, including transport failures.
    pub other: usize,
    pub healthy_after: bool,
}

#[derive(Clone, Debug)]
pub struct ServerReport {
    pub sessions_created: usize,
    pub session_failures: usize,
    pub peak_live_sessions: usize,
    pub get_key_ok: usize,
    pub get_key_failed: usize,
    pub elapsed: Duration,
    pub overload: OverloadReport,
}

impl ServerReport {
    pub fn get_key_per_sec(&self) -> f64 {
        self.get_key_ok as f64 / self.elapsed.as_secs_f64()
    }

    pub fn table(&self) -> String {
        let o = &self.overload;
        format!(
            "sessions created      {}\nsession failures      {}\npeak live sessions    {}\nget_key ok            {}\nget_key failed        {}\nsustained get_key/s   {:.0}\noverload sent         {}\n  granted             {}\n  rate limited        {}\n  other               {}\n  healthy afterwards  {}\n",
            self.sessions_created,
            self.session_failures,
            self.peak_live_sessions,
            self.get_key_ok,
            self.get_key_failed,
            self.get_key_per_sec(),
            o.sent,
            o.granted,
            o.limited,
            o.other,
            o.healthy_after
        )
    }
}

fn bench_account(api: &dyn KeyApi) -> Result<String, CliError> {
    let mut suffix = [0u8; 6];
    rand::rngs::OsRng.fill_bytes(&mut suffix);
    let cred = Credentials {
        username: format!("bench-{}", hex::encode(suffix)),
        password: hex::encode(suffix) + "-password",
    };
    api.register(&cred)?;
    Ok(api.login(&cred)?.token)
}

/// Records with random hashes; returns `(request, expected key)` pairs.
fn seed_records(
    api: &dyn KeyApi,
    token: &str,
    count: usize,
) -> Result<Vec<(GetKeyRequest, [u8; 32])>, CliError> {
    let session = api.create_key(token)?;
    (0..count)
        .map(|_| {
            let mut h = [0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut h);
            let key_id = api.add_hashes(
                token,
                &AddHashesRequest {
                    session_id: session.session_id.clone(),
                    expdate: Some(Utc::now() + ChronoDuration::days(1)),
                    hash: h,
                    description: "load".into(),
                    captcha_required: false,
                },
            )?;
            Ok((
                GetKeyRequest {
                    key_id,
                    hash: h,
                    captcha: None,
                },
                session.key,
            ))
        })
        .collect()
}

/// Drive `load_url` with many sessions and concurrent key requests, then
/// overload `overload_url`, which should run with production limits.
pub fn server_suite(
    load_url: &str,
    overload_url: &str,
    cfg: &ServerBenchConfig,
) -> Result<ServerReport, CliError> {
    let api = Arc::new(HttpKeyApi::new(load_url)?);
    let token = bench_account(api.as_ref())?;
    let threads = cfg.concurrency.max(1);

    // sessions, created in parallel
    let created = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for t in 0..threads {
            let (api, token, created, failed) = (api.clone(), &token, &created, &failed);
            s.spawn(move || {
                for _ in (t..cfg.sessions).step_by(threads) {
                    match api.create_key(token) {
                        Ok(_) => created.fetch_add(1, Ordering::Relaxed),
                        Err(_) => failed.fetch_add(1, Ordering::Relaxed),
                    };
                }
            });
        }
    });
    let mut peak = api.stats()?.live_sessions;

    let records = Arc::new(seed_records(api.as_ref(), &token, cfg.records.max(1))?);
    let ok = AtomicUsize::new(0);
    let bad = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let start = Instant::now();
    std::thread::scope(|s| -> Result<(), CliError> {
        for t in 0..threads {
            let worker = HttpKeyApi::new(load_url)?;
            let (records, ok, bad, stop) = (records.clone(), &ok, &bad, &stop);
            s.spawn(move || {
                let mut i = t;
                while !stop.load(Ordering::Relaxed) {
                    let (req, key) = &records[i % records.len()];
                    match worker.get_key(req) {
                        Ok(k) if k.as_bytes() == key => ok.fetch_add(1, Ordering::Relaxed),
                        _ => bad.fetch_add(1, Ordering::Relaxed),
                    };
                    i += threads;
                }
            });
        }
        std::thread::sleep(cfg.duration);
        stop.store(true, Ordering::Relaxed);
        Ok(())
    })?;
    let elapsed = start.elapsed();
    peak = peak.max(api.stats()?.live_sessions);

    Ok(ServerReport {
        sessions_created: created.into_inner(),
        session_failures: failed.into_inner(),
        peak_live_sessions: peak,
        get_key_ok: ok.into_inner(),
        get_key_failed: bad.into_inner(),
        elapsed,
        overload: overload(overload_url, cfg)?,
    })
}

/// Fire key requests from one address far faster than its limit allows.
fn overload(url: &str, cfg: &ServerBenchConfig) -> Result<OverloadReport, CliError> {
    let api = HttpKeyApi::new(url)?;
    let token = bench_account(&api)?;
    let (req, _) = seed_records(&api, &token, 1)?.remove(0);
    let body = serde_json::to_vec(&req).expect("serializable");
    let endpoint = format!("{}/v1/getkey", url.trim_end_matches('/'));
    let threads = cfg.concurrency.max(1);
    let counts: Vec<OverloadReport> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (body, endpoint) = (&body, &endpoint);
                s.spawn(move || {
                    let client = reqwest::blocking::Client::new();
                    let mut r = OverloadReport::default();
                    for _ in (t..cfg.overload_requests).step_by(threads) {
                        r.sent += 1;
                        let resp = client
                            .post(endpoint.as_str())
                            .header("content-type", "application/json")
                            .body(body.clone())
                            .send();
                        match resp
                            .map(|r| (r.status().as_u16(), r.headers().contains_key("retry-after")))
                        {
                            Ok((200, _)) => r.granted += 1,
                            Ok((429, has_retry)) => {
                                r.limited += 1;
                                r.missing_retry_after += usize::from(!has_retry);
                            }
                            _ => r.other += 1,
                        }
                    }
                    r
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_default())
            .collect()
    });
    let mut total = OverloadReport::default();
    for c in counts {
        total.sent += c.sent;
        total.granted += c.granted;
        total.limited += c.limited;
        total.missing_retry_after += c.missing_retry_after;
        total.other += c.other;
    }
    total.healthy_after = reqwest::blocking::get(format!("{}/healthz", url.trim_end_matches('/')))
        .map(|r| r.status().is_success())
        .unwrap_or(false);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_a_line_is_exact() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 2.0).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_of_noise_is_poor() {
        let xs: Vec<f64> = (1..=8).map(f64::from).collect();
        let ys = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!(linear_fit(&xs, &ys).r_squared < 0.2);
    }
}
