//! Recovering the original image from a protected one.

use std::io::{BufRead, Write};

use ephemera_core::crypto::{decrypt, hash, parse_envelope, PayloadEnvelope};
use ephemera_core::jpeg::parse_jfif;
use ephemera_core::stego::{detect_file, extract_header, extract_message, Protection};
use ephemera_keyserver::api::{CaptchaAnswer, GetKeyRequest};

use crate::api::{ApiError, KeyApi};
use crate::error::CliError;

/// CAPTCHA rounds before giving up.
const CAPTCHA_ATTEMPTS: usize = 3;

/// A payload pulled out of a protected JPEG, not yet decrypted.
#[derive(Clone, Debug)]
pub struct Opened {
    pub protection: Protection,
    pub envelope: PayloadEnvelope,
    /// Symbols the error correction repaired; zero for header payloads.
    pub corrected_symbols: usize,
}

pub fn open_protected(bytes: &[u8]) -> Result<Opened, CliError> {
    let file = parse_jfif(bytes).map_err(|_| CliError::NotProtected)?;
    let protection = detect_file(&file)?;
    let (raw, corrected_symbols) = match protection {
        Protection::HeaderEmbedded => (extract_header(&file)?, 0),
        Protection::BitEmbedded => {
            let out = extract_message(&file)?;
            (out.message, out.report.total_corrected())
        }
        Protection::None => return Err(CliError::NotProtected),
    };
    let envelope = parse_envelope(&raw).map_err(|e| CliError::Corrupted(e.to_string()))?;
    Ok(Opened {
        protection,
        envelope,
        corrected_symbols,
    })
}

/// Supplies answers to CAPTCHA prompts.
pub trait CaptchaSolver {
    fn solve(&mut self, prompt: &str) -> Option<String>;
}

impl<F: FnMut(&str) -> Option<String>> CaptchaSolver for F {
    fn solve(&mut self, prompt: &str) -> Option<String> {
        self(prompt)
    }
}

/// Gives the same answer every time; for scripts.
pub struct FixedAnswer(pub String);

impl CaptchaSolver for FixedAnswer {
    fn solve(&mut self, _prompt: &str) -> Option<String> {
        Some(self.0.clone())
    }
}

/// Refuses every challenge.
pub struct NoSolver;

impl CaptchaSolver for NoSolver {
    fn solve(&mut self, _prompt: &str) -> Option<String> {
        None
    }
}

/// Asks on stderr and reads a line from stdin.
pub struct PromptSolver;

impl CaptchaSolver for PromptSolver {
    fn solve(&mut self, prompt: &str) -> Option<String> {
        eprint!("{prompt} ");
        std::io::stderr().flush().ok()?;
        let mut line = String::new();
        std::io::stdin().lock().read_line(&mut line).ok()?;
        let line = line.trim();
        (!line.is_empty()).then(|| line.to_owned())
    }
}

/// Fetch the key and decrypt. The request proves possession of the
/// ciphertext by its hash.
pub fn unlock(
    opened: &Opened,
    api: &dyn KeyApi,
    solver: &mut dyn CaptchaSolver,
) -> Result<Vec<u8>, CliError> {
    let env = &opened.envelope;
    let mut req = GetKeyRequest {
        key_id: env.key_id,
        hash: hash(&env.ciphertext),
        captcha: None,
    };
    for _ in 0..=CAPTCHA_ATTEMPTS {
        match api.get_key(&req) {
            Ok(key) => {
                return decrypt(&key, &env.iv, &env.ciphertext).map_err(|_| CliError::Decrypt)
            }
            Err(e) if e.code() == Some("expired") => return Err(CliError::Expired(None)),
            Err(ApiError::Service {
                code,
                challenge: Some(c),
                ..
            }) if code == "captcha_required" => {
                let solution = solver.solve(&c.prompt).ok_or(CliError::CaptchaFailed)?;
                req.captcha = Some(CaptchaAnswer {
                    challenge_id: c.challenge_id,
                    solution,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::CaptchaFailed)
}

/// Read a local file, or download when given an http(s) URL.
pub fn read_input(location: &str) -> Result<Vec<u8>, CliError> {
    if location.starts_with("http://") || location.starts_with("https://") {
        let resp = reqwest::blocking::get(location)
            .and_then(|r| r.error_for_status())
            .map_err(|e| CliError::Download(e.to_string()))?;
        return Ok(resp
            .bytes()
            .map_err(|e| CliError::Download(e.to_string()))?
            .to_vec());
    }
    std::fs::read(location).map_err(|e| CliError::io(location, e))
}
