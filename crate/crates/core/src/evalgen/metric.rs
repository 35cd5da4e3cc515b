//! Reference-based quality metrics and the quality-delta template.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioBuffer, SampleFormat};
use crate::dsp::rms_db;
use crate::exchange::{self, Cleanup};

use super::EvalError;

pub const SEGMENTAL_SNR_ID: &str = "segmental_snr";
pub const DEFAULT_FRAME_MS: f64 = 32.0;
pub const SEG_SNR_MIN_DB: f64 = -10.0;
pub const SEG_SNR_MAX_DB: f64 = 35.0;
/// Reference frames at or below this level are excluded.
pub const SEG_SNR_ENERGY_SCREEN_DB: f64 = -60.0;

/// Mean per-frame SNR of `degraded` against `reference`, over
/// non-overlapping frames, each clamped to `[-10, 35]` dB. Frames whose
/// reference level is at or below −60 dBFS are skipped.
pub fn segmental_snr(
    reference: &AudioBuffer,
    degraded: &AudioBuffer,
    frame_ms: f64,
) -> Result<f64, EvalError> {
    if reference.len() != degraded.len() {
        return Err(EvalError::LengthMismatch {
            expected: reference.len(),
            actual: degraded.len(),
        });
    }
    let frame = ((reference.sample_rate() as f64 * frame_ms / 1000.0).round() as usize).max(1);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (r, d) in reference
        .samples()
        .chunks_exact(frame)
        .zip(degraded.samples().chunks_exact(frame))
    {
        if rms_db(r).expect("non-empty frame") <= SEG_SNR_ENERGY_SCREEN_DB {
            continue;
        }
        let sig: f64 = r.iter().map(|v| v * v).sum();
        let err: f64 = r.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum();
        let snr = if err == 0.0 {
            SEG_SNR_MAX_DB
        } else {
            10.0 * (sig / err).log10()
        };
        sum += snr.clamp(SEG_SNR_MIN_DB, SEG_SNR_MAX_DB);
        count += 1;
    }
    if count == 0 {
        return Err(EvalError::NoScorableFrames);
    }
    Ok(sum / count as f64)
}

/// A full-reference quality metric: higher is better.
pub trait QualityMetric: Send + Sync {
    fn id(&self) -> String;
    fn score(&self, degraded: &AudioBuffer, reference: &AudioBuffer) -> Result<f64, EvalError>;
}

#[derive(Debug, Clone, Copy)]
pub struct SegmentalSnr {
    pub frame_ms: f64,
}

impl Default for SegmentalSnr {
    fn default() -> Self {
        Self {
            frame_ms: DEFAULT_FRAME_MS,
        }
    }
}

impl QualityMetric for SegmentalSnr {
    fn id(&self) -> String {
        SEGMENTAL_SNR_ID.into()
    }

    fn score(&self, degraded: &AudioBuffer, reference: &AudioBuffer) -> Result<f64, EvalError> {
        segmental_snr(reference, degraded, self.frame_ms)
    }
}

/// Metric computed by an external program. The command template receives
/// `{reference}` and `{degraded}` float-32 WAV paths and must print the
/// score as the last line of stdout.
#[derive(Debug, Clone)]
pub struct ExternalMetric {
    pub command: String,
    pub exchange_dir: PathBuf,
    pub timeout: Duration,
}

impl QualityMetric for ExternalMetric {
    fn id(&self) -> String {
        format!("external:{}", self.command)
    }

    fn score(&self, degraded: &AudioBuffer, reference: &AudioBuffer) -> Result<f64, EvalError> {
        exchange::check_template(&self.command, &["reference", "degraded"])?;
        exchange::ensure_dir(&self.exchange_dir)?;
        let stem = exchange::exchange_stem(degraded, None, 0);
        let r = self.exchange_dir.join(format!("{stem}_ref.wav"));
        let d = self.exchange_dir.join(format!("{stem}_deg.wav"));
        let _cleanup = Cleanup(vec![r.clone(), d.clone()]);
        write_wav(&r, reference, SampleFormat::Float32)?;
        write_wav(&d, degraded, SampleFormat::Float32)?;
        let vars = HashMap::from([
            ("reference", r.display().to_string()),
            ("degraded", d.display().to_string()),
        ]);
        let out = exchange::run_template(&self.command, &vars, self.timeout)?;
        let last = out.stdout.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
        last.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| EvalError::MetricOutput(last.to_string()))
    }
}

/// Resolves a metric id: `segmental_snr`, or `external:<command template>`.
pub fn resolve_metric(metric_id: &str, exchange_dir: PathBuf) -> Result<Box<dyn QualityMetric>, EvalError> {
    if metric_id == SEGMENTAL_SNR_ID {
        return Ok(Box::new(SegmentalSnr::default()));
    }
    if let Some(command) = metric_id.strip_prefix("external:") {
        exchange::check_template(command, &["reference", "degraded"])?;
        return Ok(Box::new(ExternalMetric {
            command: command.to_string(),
            exchange_dir,
            timeout: Duration::from_secs(exchange::DEFAULT_TIMEOUT_SECS),
        }));
    }
    Err(EvalError::UnknownMetric(metric_id.to_string()))
}

/// Clean, noisy and enhanced versions of the same signal.
#[derive(Debug, Clone)]
pub struct EvalTriple {
    pub clean: AudioBuffer,
    pub noisy: AudioBuffer,
    pub enhanced: AudioBuffer,
    /// Level of clean minus level of `noisy − clean`, per one-second frame.
    pub true_snr_db: Vec<f64>,
}

impl EvalTriple {
    pub fn new(clean: AudioBuffer, noisy: AudioBuffer, enhanced: AudioBuffer) -> Result<Self, EvalError> {
        for other in [&noisy, &enhanced] {
            if other.len() != clean.len() {
                return Err(EvalError::LengthMismatch {
                    expected: clean.len(),
                    actual: other.len(),
                });
            }
            other
                .ensure_rate(clean.sample_rate())
                .map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
        }
        let frame = clean.sample_rate() as usize;
        let true_snr_db = clean
            .samples()
            .chunks_exact(frame)
            .zip(noisy.samples().chunks_exact(frame))
            .map(|(c, n)| {
                let noise: Vec<f64> = n.iter().zip(c).map(|(a, b)| a - b).collect();
                rms_db(c).unwrap() - rms_db(&noise).unwrap()
            })
            .collect();
        Ok(Self {
            clean,
            noisy,
            enhanced,
            true_snr_db,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityDelta {
    pub delta: f64,
    pub metric_id: String,
    pub enhanced_score: f64,
    pub noisy_score: f64,
}

/// `Q(enhanced, clean) − Q(noisy, clean)`.
pub fn delta_quality(triple: &EvalTriple, metric: &dyn QualityMetric) -> Result<QualityDelta, EvalError> {
    let enhanced_score = metric.score(&triple.enhanced, &triple.clean)?;
    let noisy_score = metric.score(&triple.noisy, &triple.clean)?;
    Ok(QualityDelta {
        delta: enhanced_score - noisy_score,
        metric_id: metric.id(),
        enhanced_score,
        noisy_score,
    })
}
