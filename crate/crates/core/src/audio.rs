//! Mono audio buffers, WAV ingestion/export and fixed-length framing.

use std::path::{Path, PathBuf};

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("{path}: file not found")]
    Missing { path: PathBuf },
    #[error("{path}: malformed WAV: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: unsupported format: {reason}")]
    Unsupported { path: PathBuf, reason: String },
    #[error("{path}: i/o error: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("sample rate must be positive")]
    ZeroRate,
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },
    #[error("frame length {seconds} s at {sample_rate} Hz is not a whole number of samples")]
    FractionalFrame { seconds: f64, sample_rate: u32 },
}

/// A mono sample sequence at a fixed sample rate.
///
/// Samples are stored as `f64` so that residuals such as `x - x̂` are computed
/// without single-precision cancellation error. Values are nominally in
/// `[-1, 1]`; out-of-range values are tolerated in memory and clipped on export.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate: sample_rate.max(1),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy of samples `[start, end)`, clamped to the buffer bounds.
    pub fn slice(&self, start: usize, end: usize) -> AudioBuffer {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        AudioBuffer {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn ensure_rate(&self, expected: u32) -> Result<(), AudioError> {
        if self.sample_rate != expected {
            return Err(AudioError::RateMismatch {
                expected,
                actual: self.sample_rate,
            });
        }
        Ok(())
    }
}

/// Sample-wise binary speech decisions aligned with an [`AudioBuffer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechMask {
    decisions: Vec<bool>,
}

impl SpeechMask {
    pub fn new(decisions: Vec<bool>) -> Self {
        Self { decisions }
    }

    pub fn filled(len: usize, value: bool) -> Self {
        Self {
            decisions: vec![value; len],
        }
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// Fraction of samples marked as speech; 0 for an empty mask.
    pub fn speech_fraction(&self) -> f64 {
        speech_fraction(&self.decisions)
    }
}

pub(crate) fn speech_fraction(decisions: &[bool]) -> f64 {
    if decisions.is_empty() {
        return 0.0;
    }
    decisions.iter().filter(|&&d| d).count() as f64 / decisions.len() as f64
}

/// Column-major reshape of a sequence into fixed-length frames.
///
/// Column `l` holds source samples `[l * frame_len, (l + 1) * frame_len)`.
/// A trailing partial frame is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid<T = f64> {
    data: Vec<T>,
    frame_len: usize,
    frame_count: usize,
}

impl<T: Copy> FrameGrid<T> {
    pub fn from_slice(values: &[T], frame_len: usize) -> Self {
        let frame_count = if frame_len == 0 {
            0
        } else {
            values.len() / frame_len
        };
        Self {
            data: values[..frame_count * frame_len].to_vec(),
            frame_len,
            frame_count,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn column(&self, l: usize) -> &[T] {
        &self.data[l * self.frame_len..(l + 1) * self.frame_len]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.frame_count).map(move |l| self.column(l))
    }

    /// Column-wise concatenation back into a flat sequence.
    pub fn flatten(&self) -> Vec<T> {
        self.data.clone()
    }
}

/// Number of samples in a `seconds`-long frame, which must be integral.
pub fn frame_len_samples(sample_rate: u32, seconds: f64) -> Result<usize, AudioError> {
    let exact = sample_rate as f64 * seconds;
    let rounded = exact.round();
    if !(seconds > 0.0) || (exact - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(AudioError::FractionalFrame {
            seconds,
            sample_rate,
        });
    }
    Ok(rounded as usize)
}

pub fn reshape_frames(buf: &AudioBuffer, frame_seconds: f64) -> Result<FrameGrid, AudioError> {
    let frame_len = frame_len_samples(buf.sample_rate(), frame_seconds)?;
    Ok(FrameGrid::from_slice(buf.samples(), frame_len))
}

pub fn reshape_mask(
    mask: &SpeechMask,
    sample_rate: u32,
    frame_seconds: f64,
) -> Result<FrameGrid<bool>, AudioError> {
    let frame_len = frame_len_samples(sample_rate, frame_seconds)?;
    Ok(FrameGrid::from_slice(mask.decisions(), frame_len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    Pcm16,
    Pcm24,
    #[default]
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::Missing {
            path: path.to_path_buf(),
        });
    }
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(AudioError::Unsupported {
            path: path.to_path_buf(),
            reason: format!("{channels} channels (mono or stereo only)"),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, bits @ (16 | 24)) => {
            let scale = (1u32 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (HoundFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(AudioError::Unsupported {
                path: path.to_path_buf(),
                reason: format!("{fmt:?} {bits}-bit (PCM16, PCM24 or float-32 only)"),
            })
        }
    };
    let samples = if channels == 2 {
        interleaved
            .chunks_exact(2)
            .map(|lr| (lr[0] + lr[1]) / 2.0)
            .collect()
    } else {
        interleaved
    };
    AudioBuffer::new(samples, spec.sample_rate).map_err(|e| AudioError::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Writes a mono WAV file. Samples outside `[-1, 1]` are clipped; the number
/// of clipped samples is logged and returned.
pub fn write_wav(
    path: impl AsRef<Path>,
    buf: &AudioBuffer,
    format: SampleFormat,
) -> Result<usize, AudioError> {
    let path = path.as_ref();
    let (bits, sample_format) = match format {
        SampleFormat::Pcm16 => (16, HoundFormat::Int),
        SampleFormat::Pcm24 => (24, HoundFormat::Int),
        SampleFormat::Float32 => (32, HoundFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    let mut clipped = 0usize;
    for &s in buf.samples() {
        let c = s.clamp(-1.0, 1.0);
        if c != s {
            clipped += 1;
        }
        let res = match format {
            SampleFormat::Float32 => writer.write_sample(c as f32),
            SampleFormat::Pcm16 | SampleFormat::Pcm24 => {
                let scale = (1i64 << (bits - 1)) as f64;
                let max = scale as i64 - 1;
                let q = ((c * scale).round() as i64).clamp(-(scale as i64), max);
                writer.write_sample(q as i32)
            }
        };
        res.map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))?;
    if clipped > 0 {
        log::warn!("{}: clipped {clipped} samples outside [-1, 1]", path.display());
    }
    Ok(clipped)
}

fn map_hound(path: &Path, err: hound::Error) -> AudioError {
    let path = path.to_path_buf();
    match err {
        hound::Error::IoError(source) => AudioError::Io { path, source },
        hound::Error::FormatError(reason) => AudioError::Malformed {
            path,
            reason: reason.to_string(),
        },
        hound::Error::Unsupported => AudioError::Unsupported {
            path,
            reason: "codec not supported".into(),
        },
        other => AudioError::Malformed {
            path,
            reason: other.to_string(),
        },
    }
}
