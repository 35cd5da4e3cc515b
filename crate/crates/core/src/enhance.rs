//! Speech enhancer contract and its backends.
//!
//! Every backend must return a buffer with exactly the input's length and
//! sample rate; [`enhance_with`] enforces this for all of them, because the
//! curation score subtracts the enhanced signal from the input sample by sample.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{read_wav, write_wav, AudioBuffer, AudioError, SampleFormat};
use crate::dsp::{istft, percentile, stft, DspError, StftConfig, MAG_FLOOR};
use crate::exchange::{self, Cleanup, ExchangeError};

pub const DEFAULT_GATE_THRESHOLD_DB: f64 = 20.0;
pub const DEFAULT_ATTENUATION_DB: f64 = 40.0;
/// Percentile of per-bin magnitude over time used as the noise floor.
pub const NOISE_FLOOR_PERCENTILE: f64 = 10.0;
/// Half-width, in bins, of the median filter applied across frequency to the
/// per-bin floors. Stationary tones occupy only a few bins and drop out.
pub const FLOOR_SMOOTHING_BINS: usize = 8;

#[derive(Debug, Error)]
pub enum EnhanceError {
    #[error("invalid enhancer spec: {0}")]
    InvalidSpec(String),
    #[error("enhancer contract violation: expected {expected} samples at {expected_rate} Hz, got {actual} samples at {actual_rate} Hz")]
    ContractViolation {
        expected: usize,
        actual: usize,
        expected_rate: u32,
        actual_rate: u32,
    },
    #[error("no oracle reference for {0}")]
    MissingReference(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    External(#[from] ExchangeError),
}

fn default_gate_threshold() -> f64 {
    DEFAULT_GATE_THRESHOLD_DB
}

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_DB
}

fn default_timeout() -> u64 {
    exchange::DEFAULT_TIMEOUT_SECS
}

/// Serializable enhancer selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnhancerSpec {
    Identity,
    SpectralGate {
        #[serde(default = "default_gate_threshold")]
        gate_threshold_db: f64,
        #[serde(default = "default_attenuation")]
        attenuation_db: f64,
    },
    /// Returns the clean reference stored under the source's file name.
    Oracle { reference_dir: PathBuf },
    External {
        command: String,
        exchange_dir: PathBuf,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

impl Default for EnhancerSpec {
    fn default() -> Self {
        EnhancerSpec::SpectralGate {
            gate_threshold_db: DEFAULT_GATE_THRESHOLD_DB,
            attenuation_db: DEFAULT_ATTENUATION_DB,
        }
    }
}

impl EnhancerSpec {
    pub fn validate(&self) -> Result<(), EnhanceError> {
        match self {
            EnhancerSpec::Identity | EnhancerSpec::Oracle { .. } => Ok(()),
            EnhancerSpec::SpectralGate {
                gate_threshold_db,
                attenuation_db,
            } => {
                if !gate_threshold_db.is_finite() {
                    return Err(EnhanceError::InvalidSpec(
                        "gate_threshold_db must be finite".into(),
                    ));
                }
                if !(attenuation_db.is_finite() && *attenuation_db >= 0.0) {
                    return Err(EnhanceError::InvalidSpec(
                        "attenuation_db must be finite and >= 0".into(),
                    ));
                }
                Ok(())
            }
            EnhancerSpec::External {
                command,
                timeout_secs,
                ..
            } => {
                exchange::check_template(command, &["input", "output"])?;
                if *timeout_secs == 0 {
                    return Err(EnhanceError::InvalidSpec("timeout_secs must be > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Builds the backend. The STFT config is used by the spectral gate.
    pub fn build(&self, stft: StftConfig) -> Result<Box<dyn Enhancer>, EnhanceError> {
        self.validate()?;
        Ok(match self.clone() {
            EnhancerSpec::Identity => Box::new(IdentityEnhancer),
            EnhancerSpec::SpectralGate {
                gate_threshold_db,
                attenuation_db,
            } => Box::new(SpectralGateEnhancer {
                gate_threshold_db,
                attenuation_db,
                stft,
            }),
            EnhancerSpec::Oracle { reference_dir } => {
                Box::new(OracleEnhancer::from_dir(reference_dir))
            }
            EnhancerSpec::External {
                command,
                exchange_dir,
                timeout_secs,
            } => Box::new(ExternalEnhancer {
                command,
                exchange_dir,
                timeout: Duration::from_secs(timeout_secs),
            }),
        })
    }
}

/// A speech enhancement backend.
pub trait Enhancer: Send + Sync {
    /// Stable identifier recorded in manifests.
    fn id(&self) -> String;

    /// Raw backend call. Use [`enhance_with`] to get the length check.
    fn process(&self, input: &AudioBuffer, source: Option<&Path>)
        -> Result<AudioBuffer, EnhanceError>;
}

/// Runs `enhancer` and rejects any output that is not sample-aligned.
pub fn enhance_with(
    enhancer: &dyn Enhancer,
    input: &AudioBuffer,
    source: Option<&Path>,
) -> Result<AudioBuffer, EnhanceError> {
    let out = enhancer.process(input, source)?;
    if out.len() != input.len() || out.sample_rate() != input.sample_rate() {
        return Err(EnhanceError::ContractViolation {
            expected: input.len(),
            actual: out.len(),
            expected_rate: input.sample_rate(),
            actual_rate: out.sample_rate(),
        });
    }
    Ok(out)
}

pub fn enhance(
    input: &AudioBuffer,
    spec: &EnhancerSpec,
    stft: StftConfig,
    source: Option<&Path>,
) -> Result<AudioBuffer, EnhanceError> {
    let backend = spec.build(stft)?;
    enhance_with(backend.as_ref(), input, source)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEnhancer;

impl Enhancer for IdentityEnhancer {
    fn id(&self) -> String {
        "identity".into()
    }

    fn process(&self, input: &AudioBuffer, _: Option<&Path>) -> Result<AudioBuffer, EnhanceError> {
        Ok(input.clone())
    }
}

#[derive(Debug, Clone)]
pub struct SpectralGateEnhancer {
    pub gate_threshold_db: f64,
    pub attenuation_db: f64,
    pub stft: StftConfig,
}

impl Enhancer for SpectralGateEnhancer {
    fn id(&self) -> String {
        format!(
            "spectral_gate(threshold={}dB,attenuation={}dB,window={},hop={})",
            self.gate_threshold_db, self.attenuation_db, self.stft.window_len, self.stft.hop
        )
    }

    fn process(&self, input: &AudioBuffer, _: Option<&Path>) -> Result<AudioBuffer, EnhanceError> {
        spectral_gate_enhance(input, self.gate_threshold_db, self.attenuation_db, &self.stft)
    }
}

/// Stationary-noise spectral gate.
///
/// The per-bin noise floor is the 10th percentile of magnitude (in dB) over
/// time, median-filtered across neighbouring bins; time-frequency cells below
/// `floor + gate_threshold_db` are scaled by `-attenuation_db`. The input is zero-padded so that every original sample
/// has full overlap-add support, and trimmed back afterwards.
pub fn spectral_gate_enhance(
    buf: &AudioBuffer,
    gate_threshold_db: f64,
    attenuation_db: f64,
    cfg: &StftConfig,
) -> Result<AudioBuffer, EnhanceError> {
    if attenuation_db < 0.0 || !attenuation_db.is_finite() {
        return Err(EnhanceError::InvalidSpec(
            "attenuation_db must be finite and >= 0".into(),
        ));
    }
    cfg.validate()?;
    let len = buf.len();
    if len < cfg.window_len {
        log::warn!(
            "spectral gate: {len}-sample buffer is shorter than one window; returned unchanged"
        );
        return Ok(buf.clone());
    }
    let pre = cfg.window_len - cfg.hop;
    let min_total = pre + len + pre;
    let steps = (min_total - cfg.window_len).div_ceil(cfg.hop) + 1;
    let total = (steps - 1) * cfg.hop + cfg.window_len;
    let mut padded = vec![0.0; total];
    padded[pre..pre + len].copy_from_slice(buf.samples());

    let mut spec = stft(&padded, buf.sample_rate(), cfg)?;
    let n_bins = spec.n_bins();

    // floor from steps that lie entirely inside the original signal
    let inside: Vec<usize> = (0..spec.n_steps())
        .filter(|&t| t * cfg.hop >= pre && t * cfg.hop + cfg.window_len <= pre + len)
        .collect();
    let floor_steps: Vec<usize> = if inside.is_empty() {
        (0..spec.n_steps()).collect()
    } else {
        inside
    };
    let to_db = |m: f64| 20.0 * m.max(MAG_FLOOR).log10();
    let floors: Vec<f64> = (0..n_bins)
        .map(|k| {
            let mags: Vec<f64> = floor_steps.iter().map(|&t| to_db(spec.get(t, k).norm())).collect();
            percentile(&mags, NOISE_FLOOR_PERCENTILE).unwrap_or(f64::NEG_INFINITY)
        })
        .collect();
    let thresholds: Vec<f64> = (0..n_bins)
        .map(|k| {
            let lo = k.saturating_sub(FLOOR_SMOOTHING_BINS);
            let hi = (k + FLOOR_SMOOTHING_BINS + 1).min(n_bins);
            percentile(&floors[lo..hi], 50.0).unwrap_or(f64::NEG_INFINITY) + gate_threshold_db
        })
        .collect();
    let gain = 10f64.powf(-attenuation_db / 20.0);
    for t in 0..spec.n_steps() {
        for (c, thr) in spec.step_mut(t).iter_mut().zip(&thresholds) {
            if to_db(c.norm()) < *thr {
                *c *= gain;
            }
        }
    }
    let out = istft(&spec, cfg)?;
    Ok(AudioBuffer::new(out[pre..pre + len].to_vec(), buf.sample_rate())?)
}

enum Reference {
    Dir(PathBuf),
    Single(AudioBuffer),
    Map(HashMap<String, AudioBuffer>),
}

/// Returns a stored clean reference instead of enhancing. Only meaningful on
/// synthetic mixes where the clean source is known.
pub struct OracleEnhancer {
    reference: Reference,
}

impl OracleEnhancer {
    /// Looks up `<dir>/<source file name>`.
    pub fn from_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            reference: Reference::Dir(dir.into()),
        }
    }

    /// Returns `clean` for every input.
    pub fn single(clean: AudioBuffer) -> Self {
        Self {
            reference: Reference::Single(clean),
        }
    }

    /// Looks references up by source path string.
    pub fn from_map(map: HashMap<String, AudioBuffer>) -> Self {
        Self {
            reference: Reference::Map(map),
        }
    }
}

impl Enhancer for OracleEnhancer {
    fn id(&self) -> String {
        match &self.reference {
            Reference::Dir(d) => format!("oracle({})", d.display()),
            _ => "oracle".into(),
        }
    }

    fn process(
        &self,
        _input: &AudioBuffer,
        source: Option<&Path>,
    ) -> Result<AudioBuffer, EnhanceError> {
        let describe = || source.map(|p| p.display().to_string()).unwrap_or_else(|| "<memory>".into());
        match &self.reference {
            Reference::Single(clean) => Ok(clean.clone()),
            Reference::Map(map) => source
                .and_then(|p| map.get(&p.to_string_lossy().to_string()))
                .cloned()
                .ok_or_else(|| EnhanceError::MissingReference(describe())),
            Reference::Dir(dir) => {
                let name = source
                    .and_then(|p| p.file_name())
                    .ok_or_else(|| EnhanceError::MissingReference(describe()))?;
                let path = dir.join(name);
                if !path.exists() {
                    return Err(EnhanceError::MissingReference(path.display().to_string()));
                }
                Ok(read_wav(path)?)
            }
        }
    }
}

/// Runs an external enhancement process through float-32 WAV files.
#[derive(Debug, Clone)]
pub struct ExternalEnhancer {
    pub command: String,
    pub exchange_dir: PathBuf,
    pub timeout: Duration,
}

impl Enhancer for ExternalEnhancer {
    fn id(&self) -> String {
        format!("external({})", self.command)
    }

    fn process(
        &self,
        input: &AudioBuffer,
        source: Option<&Path>,
    ) -> Result<AudioBuffer, EnhanceError> {
        external_enhance(input, &self.command, &self.exchange_dir, self.timeout, source)
    }
}

pub fn external_enhance(
    buf: &AudioBuffer,
    command: &str,
    exchange_dir: &Path,
    timeout: Duration,
    source: Option<&Path>,
) -> Result<AudioBuffer, EnhanceError> {
    exchange::check_template(command, &["input", "output"])?;
    exchange::ensure_dir(exchange_dir)?;
    let stem = exchange::exchange_stem(buf, source, 0);
    let input = exchange_dir.join(format!("{stem}_in.wav"));
    let output = exchange_dir.join(format!("{stem}_out.wav"));
    let _cleanup = Cleanup(vec![input.clone(), output.clone()]);
    write_wav(&input, buf, SampleFormat::Float32)?;
    let vars = HashMap::from([
        ("input", input.display().to_string()),
        ("output", output.display().to_string()),
    ]);
    exchange::run_template(command, &vars, timeout)?;
    let out = read_wav(&output)?;
    if out.len() != buf.len() || out.sample_rate() != buf.sample_rate() {
        return Err(EnhanceError::ContractViolation {
            expected: buf.len(),
            actual: out.len(),
            expected_rate: buf.sample_rate(),
            actual_rate: out.sample_rate(),
        });
    }
    Ok(out)
}
