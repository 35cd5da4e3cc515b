use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::frame_len_samples;
use crate::dsp::{StftConfig, DEFAULT_ROLLOFF_DB};
use crate::enhance::EnhancerSpec;
use crate::vad::VadSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

/// Every parameter of a curation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    #[serde(alias = "f_s")]
    pub sample_rate: u32,
    /// Duration of one curated sample.
    #[serde(alias = "N")]
    pub segment_seconds: f64,
    /// Duration of one scoring frame.
    #[serde(alias = "w_l")]
    pub frame_seconds: f64,
    /// Frames need a residual SNR strictly above this.
    #[serde(alias = "s_th")]
    pub snr_threshold_db: f64,
    /// Frames need an estimated cutoff at or above this.
    #[serde(alias = "b_w")]
    pub bandwidth_hz: f64,
    pub rolloff_db: f64,
    #[serde(alias = "rho_max")]
    pub rho_max_db: f64,
    pub round_id: u32,
    pub stft: StftConfig,
    pub enhancer: EnhancerSpec,
    pub vad: VadSpec,
}

pub const FIELDS: &[&str] = &[
    "sample_rate",
    "segment_seconds",
    "frame_seconds",
    "snr_threshold_db",
    "bandwidth_hz",
    "rolloff_db",
    "rho_max_db",
    "round_id",
    "stft",
    "enhancer",
    "vad",
];

const ALIASES: &[(&str, &str)] = &[
    ("f_s", "sample_rate"),
    ("N", "segment_seconds"),
    ("w_l", "frame_seconds"),
    ("s_th", "snr_threshold_db"),
    ("b_w", "bandwidth_hz"),
    ("rho_max", "rho_max_db"),
];

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            sample_rate: 48_000,
            segment_seconds: 12.0,
            frame_seconds: 1.0,
            snr_threshold_db: 20.0,
            bandwidth_hz: 20_000.0,
            rolloff_db: DEFAULT_ROLLOFF_DB,
            rho_max_db: 100.0,
            round_id: 0,
            stft: StftConfig::default(),
            enhancer: EnhancerSpec::default(),
            vad: VadSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

impl CurationConfig {
    /// Loads and validates a config file; `.toml` files are parsed as TOML,
    /// anything else as JSON. Top-level fields left out fall back to their
    /// defaults, each logged at info level.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => ConfigFormat::Toml,
            _ => ConfigFormat::Json,
        };
        Self::parse(&text, format)
    }

    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self, ConfigError> {
        let value: Value = match format {
            ConfigFormat::Json => {
                serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            ConfigFormat::Toml => {
                let t: toml::Value =
                    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
                serde_json::to_value(t).map_err(|e| ConfigError::Parse(e.to_string()))?
            }
        };
        let present: BTreeSet<String> = value
            .as_object()
            .ok_or_else(|| ConfigError::Parse("config must be a key-value document".into()))?
            .keys()
            .map(|k| {
                ALIASES
                    .iter()
                    .find(|(a, _)| a == k)
                    .map(|(_, f)| f.to_string())
                    .unwrap_or_else(|| k.clone())
            })
            .collect();
        let cfg: CurationConfig =
            serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let defaults = CurationConfig::default();
        let default_doc = serde_json::to_value(&defaults).expect("config serializes");
        for field in FIELDS.iter().filter(|f| !present.contains(**f)) {
            log::info!("config: `{field}` not set, using default {}", default_doc[*field]);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sample_rate == 0 {
            return Err(ConfigError::invalid("sample_rate", "must be positive"));
        }
        let frame_len = frame_len_samples(self.sample_rate, self.frame_seconds)
            .map_err(|e| ConfigError::invalid("frame_seconds", e.to_string()))?;
        let k = self.segment_seconds / self.frame_seconds;
        if !(self.segment_seconds > 0.0) || (k - k.round()).abs() > 1e-9 || k.round() < 1.0 {
            return Err(ConfigError::invalid(
                "segment_seconds",
                format!(
                    "{} is not a positive integer multiple of frame_seconds {}",
                    self.segment_seconds, self.frame_seconds
                ),
            ));
        }
        if !self.snr_threshold_db.is_finite() {
            return Err(ConfigError::invalid("snr_threshold_db", "must be finite"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.bandwidth_hz >= 0.0 && self.bandwidth_hz <= nyquist) {
            return Err(ConfigError::invalid(
                "bandwidth_hz",
                format!("{} outside [0, {nyquist}]", self.bandwidth_hz),
            ));
        }
        if !(self.rolloff_db.is_finite() && self.rolloff_db > 0.0) {
            return Err(ConfigError::invalid("rolloff_db", "must be finite and > 0"));
        }
        if !(self.rho_max_db.is_finite() && self.rho_max_db > self.snr_threshold_db) {
            return Err(ConfigError::invalid(
                "rho_max_db",
                "must be finite and above snr_threshold_db",
            ));
        }
        self.stft
            .validate()
            .map_err(|e| ConfigError::invalid("stft", e.to_string()))?;
        if self.stft.window_len > frame_len {
            return Err(ConfigError::invalid(
                "stft",
                format!(
                    "window_len {} exceeds the {frame_len}-sample frame",
                    self.stft.window_len
                ),
            ));
        }
        self.enhancer
            .validate()
            .map_err(|e| ConfigError::invalid("enhancer", e.to_string()))?;
        self.vad
            .validate()
            .map_err(|e| ConfigError::invalid("vad", e.to_string()))?;
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        (self.sample_rate as f64 * self.frame_seconds).round() as usize
    }

    /// Frames per curated segment.
    pub fn frames_per_segment(&self) -> usize {
        (self.segment_seconds / self.frame_seconds).round() as usize
    }

    pub fn segment_len(&self) -> usize {
        self.frame_len() * self.frames_per_segment()
    }

    /// Canonical text: compact JSON with keys in sorted order.
    pub fn canonical_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// Lowercase hex SHA-256 of [`Self::canonical_text`].
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}
