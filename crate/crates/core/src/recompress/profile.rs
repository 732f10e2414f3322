//! Declarative descriptions of how a site re-encodes uploads.

use crate::jpeg::{Arithmetic, QuantTable, Subsampling, STD_CHROMA_QUANT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Luminance table observed on Facebook uploads, natural order.
pub const FACEBOOK_LUMA_QUANT: [u16; 64] = [
    5, 3, 3, 5, 7, 12, 15, 18, //
    4, 4, 4, 6, 8, 17, 18, 17, //
    4, 4, 5, 7, 12, 17, 21, 17, //
    4, 5, 7, 9, 15, 26, 24, 19, //
    5, 7, 11, 17, 20, 33, 31, 23, //
    7, 11, 17, 19, 24, 31, 34, 28, //
    15, 19, 23, 26, 31, 36, 36, 30, //
    22, 28, 29, 29, 34, 30, 31, 30,
];

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("reading profile file: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown profile {0:?}")]
    Unknown(String),
    #[error("profile {name:?}: {reason}")]
    Invalid { name: String, reason: String },
}

fn default_true() -> bool {
    true
}

fn default_arithmetic() -> Arithmetic {
    Arithmetic::Integer
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteProfile {
    pub name: String,
    pub max_width: usize,
    pub max_height: usize,
    pub luma_quant: QuantTable,
    pub chroma_quant: QuantTable,
    pub chroma_subsampling: Subsampling,
    #[serde(default = "default_true")]
    pub strip_metadata: bool,
    /// Transform arithmetic of the site's codec; deployed libraries use the
    /// fixed-point one.
    #[serde(default = "default_arithmetic")]
    pub arithmetic: Arithmetic,
}

#[derive(Deserialize)]
struct ProfileFile {
    #[serde(rename = "profile")]
    profiles: Vec<SiteProfile>,
}

impl SiteProfile {
    fn with_fb_tables(name: &str, size: usize) -> Self {
        Self {
            name: name.into(),
            max_width: size,
            max_height: size,
            luma_quant: QuantTable::new(FACEBOOK_LUMA_QUANT).expect("valid table"),
            chroma_quant: QuantTable::new(STD_CHROMA_QUANT).expect("valid table"),
            chroma_subsampling: Subsampling::Chroma420,
            strip_metadata: true,
            arithmetic: default_arithmetic(),
        }
    }

    pub fn facebook() -> Self {
        Self::with_fb_tables("facebook", 720)
    }

    /// Flickr dimensions; the luminance table is borrowed from Facebook.
    pub fn flickr() -> Self {
        Self::with_fb_tables("flickr", 1024)
    }

    /// wer-kennt-wen dimensions; the luminance table is borrowed from Facebook.
    pub fn werkenntwen() -> Self {
        Self::with_fb_tables("werkenntwen", 620)
    }

    pub fn builtins() -> Vec<Self> {
        vec![Self::facebook(), Self::flickr(), Self::werkenntwen()]
    }

    pub fn builtin(name: &str) -> Result<Self, ProfileError> {
        Self::builtins()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| ProfileError::Unknown(name.into()))
    }

    fn validate(self) -> Result<Self, ProfileError> {
        if self.max_width < 8 || self.max_height < 8 {
            return Err(ProfileError::Invalid {
                name: self.name,
                reason: "maximum dimensions below 8".into(),
            });
        }
        Ok(self)
    }

    /// Parse `[[profile]]` tables from TOML.
    pub fn parse_toml(text: &str) -> Result<Vec<Self>, ProfileError> {
        let file: ProfileFile = toml::from_str(text)?;
        file.profiles.into_iter().map(Self::validate).collect()
    }

    pub fn load_file(path: &std::path::Path) -> Result<Vec<Self>, ProfileError> {
        Self::parse_toml(&std::fs::read_to_string(path)?)
    }

    /// Look `name` up among the built-ins and, if given, a profile file.
    /// File entries win over built-ins of the same name.
    pub fn resolve(name: &str, file: Option<&std::path::Path>) -> Result<Self, ProfileError> {
        if let Some(path) = file {
            if let Some(p) = Self::load_file(path)?
                .into_iter()
                .find(|p| p.name.eq_ignore_ascii_case(name))
            {
                return Ok(p);
            }
        }
        Self::builtin(name)
    }
}
