//! The curation engine: residual-SNR scoring, SNR and bandwidth gating,
//! contiguous segment extraction, rounds, manifests and A/B export.

pub mod config;
pub mod engine;
pub mod export;
pub mod histogram;
pub mod manifest;
pub mod round;
pub mod scoring;

use thiserror::Error;

pub use config::{ConfigError, ConfigFormat, CurationConfig};
pub use engine::{curate_file, Curator, FileCuration};
pub use export::{export_ab_pairs, export_ab_pairs_from_manifest, ExportSummary};
pub use histogram::{HistogramBin, RhoHistogram};
pub use manifest::{
    filter_manifest, filter_segments, read_manifest, CuratedSegment, ManifestError, ManifestRead,
    ManifestWriter, RhoBound,
};
pub use round::{report_path, run_round, run_round_with, FailureRecord, RoundReport};
pub use scoring::{
    bandwidth_gate, combine, extract_segments, rho_hat, rho_per_frame, snr_gate,
    is_neg_inf, AcceptanceVector, BandwidthProfile, RhoVector, NEG_INF_SENTINEL,
};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Dsp(#[from] crate::dsp::DspError),
    #[error("enhancement failed: {0}")]
    Enhance(#[from] crate::enhance::EnhanceError),
    #[error("speech detection failed: {0}")]
    Vad(#[from] crate::vad::VadError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}
