//! Voice activity detection producing sample-wise speech masks.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{read_wav, write_wav, AudioBuffer, AudioError, SampleFormat, SpeechMask};
use crate::dsp::{percentile, rms_db};
use crate::exchange::{self, Cleanup, ExchangeError};

pub const DEFAULT_WINDOW_SECONDS: f64 = 0.02;
pub const DEFAULT_RELATIVE_THRESHOLD_DB: f64 = 15.0;
pub const DEFAULT_ABSOLUTE_FLOOR_DB: f64 = -60.0;
pub const FLOOR_PERCENTILE: f64 = 10.0;

#[derive(Debug, Error)]
pub enum VadError {
    #[error("invalid VAD spec: {0}")]
    InvalidSpec(String),
    #[error("VAD output has {actual} samples, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    External(#[from] ExchangeError),
}

fn default_window() -> f64 {
    DEFAULT_WINDOW_SECONDS
}
fn default_relative() -> f64 {
    DEFAULT_RELATIVE_THRESHOLD_DB
}
fn default_absolute() -> f64 {
    DEFAULT_ABSOLUTE_FLOOR_DB
}
fn default_timeout() -> u64 {
    exchange::DEFAULT_TIMEOUT_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VadSpec {
    Energy {
        #[serde(default = "default_window")]
        window_seconds: f64,
        #[serde(default = "default_relative")]
        relative_threshold_db: f64,
        #[serde(default = "default_absolute")]
        absolute_floor_db: f64,
    },
    AlwaysOn,
    /// External model; output WAV samples >= 0.5 count as speech.
    External {
        command: String,
        exchange_dir: PathBuf,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

impl Default for VadSpec {
    fn default() -> Self {
        VadSpec::Energy {
            window_seconds: DEFAULT_WINDOW_SECONDS,
            relative_threshold_db: DEFAULT_RELATIVE_THRESHOLD_DB,
            absolute_floor_db: DEFAULT_ABSOLUTE_FLOOR_DB,
        }
    }
}

impl VadSpec {
    pub fn validate(&self) -> Result<(), VadError> {
        match self {
            VadSpec::Energy {
                window_seconds,
                relative_threshold_db,
                absolute_floor_db,
            } => {
                if !(window_seconds.is_finite() && *window_seconds > 0.0) {
                    return Err(VadError::InvalidSpec("window_seconds must be > 0".into()));
                }
                if !relative_threshold_db.is_finite() || !absolute_floor_db.is_finite() {
                    return Err(VadError::InvalidSpec("thresholds must be finite".into()));
                }
                Ok(())
            }
            VadSpec::AlwaysOn => Ok(()),
            VadSpec::External {
                command,
                timeout_secs,
                ..
            } => {
                exchange::check_template(command, &["input", "output"])?;
                if *timeout_secs == 0 {
                    return Err(VadError::InvalidSpec("timeout_secs must be > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Window length in samples: `sample_rate · window_seconds` rounded, at least 1.
pub fn window_samples(sample_rate: u32, window_seconds: f64) -> usize {
    ((sample_rate as f64 * window_seconds).round() as usize).max(1)
}

/// Sample-wise speech mask for `buf`. Decisions are made per window and
/// replicated to every sample of that window; a trailing partial window gets
/// its own decision.
pub fn detect(buf: &AudioBuffer, spec: &VadSpec) -> Result<SpeechMask, VadError> {
    spec.validate()?;
    match spec {
        VadSpec::AlwaysOn => Ok(SpeechMask::filled(buf.len(), true)),
        VadSpec::Energy { window_seconds, .. } => {
            let win = window_samples(buf.sample_rate(), *window_seconds);
            let decisions = energy_vad_windows(buf, spec)?;
            let mut mask = Vec::with_capacity(buf.len());
            for (w, &d) in decisions.iter().enumerate() {
                let n = win.min(buf.len() - w * win);
                mask.extend(std::iter::repeat_n(d, n));
            }
            Ok(SpeechMask::new(mask))
        }
        VadSpec::External {
            command,
            exchange_dir,
            timeout_secs,
        } => external_detect(buf, command, exchange_dir, Duration::from_secs(*timeout_secs), None),
    }
}

/// Per-window energy decisions: a window is speech iff its RMS level is at
/// least `max(floor + relative_threshold_db, absolute_floor_db)`, where the
/// floor is the 10th percentile of window levels over the whole buffer.
pub fn energy_vad_windows(buf: &AudioBuffer, spec: &VadSpec) -> Result<Vec<bool>, VadError> {
    let VadSpec::Energy {
        window_seconds,
        relative_threshold_db,
        absolute_floor_db,
    } = spec
    else {
        return Err(VadError::InvalidSpec("energy VAD requires an energy spec".into()));
    };
    let win = window_samples(buf.sample_rate(), *window_seconds);
    let levels: Vec<f64> = buf
        .samples()
        .chunks(win)
        .map(|c| rms_db(c).expect("chunks are non-empty"))
        .collect();
    let Some(floor) = percentile(&levels, FLOOR_PERCENTILE) else {
        return Ok(Vec::new());
    };
    let threshold = (floor + relative_threshold_db).max(*absolute_floor_db);
    Ok(levels.iter().map(|&l| l >= threshold).collect())
}

pub fn external_detect(
    buf: &AudioBuffer,
    command: &str,
    exchange_dir: &Path,
    timeout: Duration,
    source: Option<&Path>,
) -> Result<SpeechMask, VadError> {
    exchange::check_template(command, &["input", "output"])?;
    exchange::ensure_dir(exchange_dir)?;
    let stem = exchange::exchange_stem(buf, source, 0);
    let input = exchange_dir.join(format!("{stem}_vad_in.wav"));
    let output = exchange_dir.join(format!("{stem}_vad_out.wav"));
    let _cleanup = Cleanup(vec![input.clone(), output.clone()]);
    write_wav(&input, buf, SampleFormat::Float32)?;
    let vars = HashMap::from([
        ("input", input.display().to_string()),
        ("output", output.display().to_string()),
    ]);
    exchange::run_template(command, &vars, timeout)?;
    let out = read_wav(&output)?;
    if out.len() != buf.len() {
        return Err(VadError::LengthMismatch {
            expected: buf.len(),
            actual: out.len(),
        });
    }
    Ok(SpeechMask::new(out.samples().iter().map(|&s| s >= 0.5).collect()))
}
