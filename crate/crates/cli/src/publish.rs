//! Encrypting images and hiding them in covers.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use chrono::{DateTime, Utc};
use ephemera_core::crypto::{
    build_envelope, encrypt, hash, PayloadEnvelope, SymmetricKey, ENVELOPE_FIXED_LEN,
};
use ephemera_core::jpeg::{
    decode_with, encode, encode_to_bytes, fit_within, parse_jfif, resize_bilinear, serialize_jfif,
    CodecHooks, DecodeOptions, EncodeParams, JfifImage, Subsampling, YcbcrPlanes,
};
use ephemera_core::recompress::SiteProfile;
use ephemera_core::stego::{embed_header, embed_message, make_container, EmbedMode, EmbedRegion};
use ephemera_keyserver::api::AddHashesRequest;

use crate::api::KeyApi;
use crate::error::CliError;

/// Text drawn in the banner strip of every cover.
pub const BANNER_TEXT: &str = "Protected image: view with ephemera";
/// Quality of the cover the publisher uploads in bit mode.
pub const COVER_QUALITY: u8 = 95;
const HEADER_COVER_QUALITY: u8 = 85;
/// Qualities tried, best first, when a source has to be re-encoded.
const REENCODE_QUALITIES: [u8; 12] = [90, 85, 80, 75, 70, 65, 60, 50, 40, 30, 20, 10];

#[derive(Clone, Debug)]
pub struct PublishJob {
    pub inputs: Vec<PathBuf>,
    /// `None` publishes without a date; set one later with an update.
    pub expires: Option<DateTime<Utc>>,
    pub description: String,
    pub mode: EmbedMode,
    pub profile: SiteProfile,
    pub keyserver_url: String,
    pub captcha_required: bool,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublishedImage {
    pub source: PathBuf,
    pub output: PathBuf,
    pub key_id: [u8; 16],
    pub ciphertext_hash: [u8; 32],
    pub plaintext_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublishReport {
    pub images: Vec<PublishedImage>,
}

enum Cover {
    Bits {
        planes: YcbcrPlanes,
        params: EncodeParams,
        max_envelope: usize,
    },
    Header {
        file: JfifImage,
    },
}

/// A cover built once and reused for every image of a job.
pub struct Embedder {
    cover: Cover,
}

impl Embedder {
    pub fn new(profile: &SiteProfile, mode: EmbedMode) -> Result<Self, CliError> {
        let container = make_container(profile.max_width, profile.max_height, BANNER_TEXT)?;
        let cover = match mode {
            EmbedMode::LuminanceBits => {
                let region = EmbedRegion::standard(profile.max_width, profile.max_height)?;
                Cover::Bits {
                    planes: YcbcrPlanes::from_rgb(&container, Subsampling::Chroma420),
                    params: EncodeParams::quality(COVER_QUALITY),
                    max_envelope: region.capacity().max_message_bytes(),
                }
            }
            EmbedMode::HeaderSegments => Cover::Header {
                file: encode(
                    &container,
                    &EncodeParams::quality(HEADER_COVER_QUALITY),
                    &mut CodecHooks::none(),
                )?,
            },
        };
        Ok(Self { cover })
    }

    /// The cover for `profile` and `mode`, built on first use. Covers depend
    /// only on the profile's dimensions, so every job shares one.
    pub fn shared(profile: &SiteProfile, mode: EmbedMode) -> Result<Arc<Self>, CliError> {
        type CoverKey = (usize, usize, EmbedMode);
        static COVERS: OnceLock<Mutex<HashMap<CoverKey, Arc<Embedder>>>> = OnceLock::new();
        let key = (profile.max_width, profile.max_height, mode);
        let covers = COVERS.get_or_init(Default::default);
        if let Some(e) = covers.lock().expect("cover cache").get(&key) {
            return Ok(e.clone());
        }
        let built = Arc::new(Self::new(profile, mode)?);
        Ok(covers
            .lock()
            .expect("cover cache")
            .entry(key)
            .or_insert(built)
            .clone())
    }

    /// Largest envelope the cover holds.
    pub fn envelope_budget(&self) -> usize {
        match &self.cover {
            Cover::Bits { max_envelope, .. } => *max_envelope,
            Cover::Header { .. } => u32::MAX as usize,
        }
    }

    /// Largest plaintext whose envelope fits, for a given keyserver URL.
    pub fn plaintext_budget(&self, url: &str) -> usize {
        let room = self
            .envelope_budget()
            .saturating_sub(ENVELOPE_FIXED_LEN + url.len());
        // PKCS#7 always adds at least one byte
        (room / 16 * 16).saturating_sub(1)
    }

    /// Hide an envelope and return the finished JPEG.
    pub fn embed(&self, envelope: &[u8]) -> Result<Vec<u8>, CliError> {
        let file = match &self.cover {
            Cover::Bits { planes, params, .. } => embed_message(planes, envelope, params)?,
            Cover::Header { file } => embed_header(file, envelope)?,
        };
        Ok(serialize_jfif(&file)?)
    }
}

/// Bytes that get encrypted for one source image. Sources already within
/// the profile's dimensions and the budget are kept as they are; others are
/// scaled down and re-encoded at the best quality that fits.
pub fn prepare_plaintext(
    source: &[u8],
    profile: &SiteProfile,
    budget: usize,
) -> Result<Vec<u8>, CliError> {
    let file = parse_jfif(source)?;
    let (w, h) = (file.width(), file.height());
    let (tw, th) = fit_within(w, h, profile.max_width, profile.max_height);
    if (tw, th) == (w, h) && source.len() <= budget {
        return Ok(source.to_vec());
    }
    let image = decode_with(&file, DecodeOptions::default(), &mut CodecHooks::none())?;
    let image = resize_bilinear(&image, tw, th)?;
    let mut smallest = usize::MAX;
    for q in REENCODE_QUALITIES {
        let bytes = encode_to_bytes(&image, &EncodeParams::quality(q))?;
        if bytes.len() <= budget {
            return Ok(bytes);
        }
        smallest = smallest.min(bytes.len());
    }
    Err(CliError::Capacity {
        needed: smallest,
        available: budget,
    })
}

fn output_name(source: &Path, taken: &mut HashSet<String>) -> String {
    let stem = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let mut name = format!("{stem}.ephemera.jpg");
    let mut i = 1;
    while !taken.insert(name.clone()) {
        i += 1;
        name = format!("{stem}-{i}.ephemera.jpg");
    }
    name
}

/// Publish every input of a job under one fresh key.
pub fn publish(job: &PublishJob, api: &dyn KeyApi, token: &str) -> Result<PublishReport, CliError> {
    let sources = job
        .inputs
        .iter()
        .map(|p| std::fs::read(p).map_err(|e| CliError::io(p, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let embedder = Embedder::shared(&job.profile, job.mode)?;
    let budget = embedder.plaintext_budget(&job.keyserver_url);
    let plaintexts = sources
        .iter()
        .map(|s| prepare_plaintext(s, &job.profile, budget))
        .collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(&job.output_dir).map_err(|e| CliError::io(&job.output_dir, e))?;
    let session = api.create_key(token)?;
    let key = SymmetricKey::from_bytes(&session.key).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut taken = HashSet::new();
    let mut images = Vec::with_capacity(plaintexts.len());
    for (source, plaintext) in job.inputs.iter().zip(&plaintexts) {
        let (iv, ciphertext) = encrypt(&key, plaintext);
        let ciphertext_hash = hash(&ciphertext);
        let key_id = api.add_hashes(
            token,
            &AddHashesRequest {
                session_id: session.session_id.clone(),
                expdate: job.expires,
                hash: ciphertext_hash,
                description: job.description.clone(),
                captcha_required: job.captcha_required,
            },
        )?;
        let envelope = build_envelope(&PayloadEnvelope {
            keyserver_url: job.keyserver_url.clone(),
            key_id,
            iv,
            ciphertext,
        })
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let protected = embedder.embed(&envelope)?;
        let output = job.output_dir.join(output_name(source, &mut taken));
        std::fs::write(&output, &protected).map_err(|e| CliError::io(&output, e))?;
        images.push(PublishedImage {
            source: source.clone(),
            output,
            key_id,
            ciphertext_hash,
            plaintext_len: plaintext.len(),
        });
    }
    Ok(PublishReport { images })
}
