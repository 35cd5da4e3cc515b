//! Synthetic corpora, noise injection, quality deltas and round reports.

pub mod metric;
pub mod noise;
pub mod report;
pub mod synth;

use thiserror::Error;

pub use metric::{
    delta_quality, resolve_metric, segmental_snr, EvalTriple, ExternalMetric, QualityDelta,
    QualityMetric, SegmentalSnr, SEGMENTAL_SNR_ID,
};
pub use noise::{
    draw_rayleigh, generate_noise, inject_noise, inject_noise_at, mix_at_snr, NoiseKind, NoiseSpec,
    NoisyMix,
};
pub use report::{
    accepted_hours, accepted_hours_of, build_report, rho_histogram, rho_histogram_of,
    CurationReport, RoundHistogram, RoundHours,
};
pub use synth::synth_clean;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("reference signal is digital silence")]
    SilentReference,
    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("no frame passes the reference energy screen")]
    NoScorableFrames,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("metric printed `{0}`, expected a number")]
    MetricOutput(String),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    External(#[from] crate::exchange::ExchangeError),
}
