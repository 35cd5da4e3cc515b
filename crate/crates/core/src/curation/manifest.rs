//! Curated-segment records and the append-only JSON-lines manifest.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::CurationConfig;
use super::scoring::is_neg_inf;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid segment record: {0}")]
    InvalidSegment(String),
}

/// One accepted segment: the manifest record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuratedSegment {
    pub source_uri: String,
    pub round_id: u32,
    pub start_sample: u64,
    pub end_sample: u64,
    pub sample_rate: u32,
    pub frame_rho: Vec<f64>,
    pub frame_fc: Vec<f64>,
    pub config_hash: String,
    pub enhancer_id: String,
}

impl CuratedSegment {
    /// Checks the invariants that do not depend on the producing config.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let bad = |m: String| Err(ManifestError::InvalidSegment(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.end_sample <= self.start_sample {
            return bad(format!(
                "empty span [{}, {})",
                self.start_sample, self.end_sample
            ));
        }
        let n = self.frame_rho.len() as u64;
        if n == 0 || self.frame_fc.len() as u64 != n {
            return bad(format!(
                "frame_rho/frame_fc lengths {} / {}",
                self.frame_rho.len(),
                self.frame_fc.len()
            ));
        }
        let span = self.end_sample - self.start_sample;
        if !span.is_multiple_of(n) {
            return bad(format!("span {span} is not divisible into {n} frames"));
        }
        let frame_len = span / n;
        if !self.start_sample.is_multiple_of(frame_len) {
            return bad(format!(
                "start_sample {} is not aligned to {frame_len}-sample frames",
                self.start_sample
            ));
        }
        if self.frame_rho.iter().any(|r| !r.is_finite()) {
            return bad("non-finite frame_rho".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self
            .frame_fc
            .iter()
            .any(|f| !f.is_finite() || *f < 0.0 || *f > nyquist)
        {
            return bad(format!("frame_fc outside [0, {nyquist}]"));
        }
        if self.config_hash.len() != 64
            || !self
                .config_hash
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        {
            return bad(format!("config_hash `{}` is not a SHA-256 hex digest", self.config_hash));
        }
        Ok(())
    }

    /// Checks the invariants tied to the config that produced the segment.
    pub fn validate_against(&self, cfg: &CurationConfig) -> Result<(), ManifestError> {
        self.validate()?;
        let bad = |m: String| Err(ManifestError::InvalidSegment(m));
        if self.sample_rate != cfg.sample_rate {
            return bad(format!("sample_rate {} != {}", self.sample_rate, cfg.sample_rate));
        }
        if self.end_sample - self.start_sample != cfg.segment_len() as u64 {
            return bad(format!(
                "span {} != {} samples",
                self.end_sample - self.start_sample,
                cfg.segment_len()
            ));
        }
        if !self.start_sample.is_multiple_of(cfg.frame_len() as u64) {
            return bad("start_sample not frame aligned".into());
        }
        if self
            .frame_rho
            .iter()
            .any(|&r| is_neg_inf(r) || r < cfg.snr_threshold_db)
        {
            return bad(format!("frame_rho below {} dB", cfg.snr_threshold_db));
        }
        if self.frame_fc.iter().any(|&f| f < cfg.bandwidth_hz) {
            return bad(format!("frame_fc below {} Hz", cfg.bandwidth_hz));
        }
        Ok(())
    }

    pub fn len_samples(&self) -> u64 {
        self.end_sample - self.start_sample
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len_samples() as f64 / self.sample_rate as f64
    }
}

/// Append-only manifest writer; one JSON object per line.
pub struct ManifestWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl ManifestWriter {
    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| ManifestError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, seg: &CuratedSegment) -> Result<(), ManifestError> {
        seg.validate()?;
        let line = serde_json::to_string(seg).expect("segment serializes");
        writeln!(self.out, "{line}").map_err(|source| ManifestError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn flush(&mut self) -> Result<(), ManifestError> {
        self.out.flush().map_err(|source| ManifestError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

impl Drop for ManifestWriter {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

/// Parsed manifest contents. Lines that fail to parse or validate are
/// counted in `skipped`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ManifestRead {
    pub segments: Vec<CuratedSegment>,
    pub skipped: usize,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<ManifestRead, ManifestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut read = ManifestRead::default();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CuratedSegment>(&line)
            .map_err(|e| e.to_string())
            .and_then(|s| s.validate().map(|_| s).map_err(|e| e.to_string()))
        {
            Ok(seg) => read.segments.push(seg),
            Err(reason) => {
                log::warn!("{}:{}: skipping record: {reason}", path.display(), lineno + 1);
                read.skipped += 1;
            }
        }
    }
    Ok(read)
}

/// Bound on a segment's frame scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoBound {
    /// Keep segments whose lowest frame score is at least this.
    Min(f64),
    /// Keep segments whose highest frame score is at most this.
    Max(f64),
}

impl RhoBound {
    pub fn keeps(&self, seg: &CuratedSegment) -> bool {
        match *self {
            RhoBound::Min(b) => seg.frame_rho.iter().all(|&r| r >= b),
            RhoBound::Max(b) => seg.frame_rho.iter().all(|&r| r <= b),
        }
    }
}

pub fn filter_segments(segments: Vec<CuratedSegment>, bounds: &[RhoBound]) -> Vec<CuratedSegment> {
    segments
        .into_iter()
        .filter(|s| bounds.iter().all(|b| b.keeps(s)))
        .collect()
}

/// Reads `manifest` and keeps segments satisfying every bound.
pub fn filter_manifest(
    manifest: impl AsRef<Path>,
    bounds: &[RhoBound],
) -> Result<ManifestRead, ManifestError> {
    let read = read_manifest(manifest)?;
    Ok(ManifestRead {
        segments: filter_segments(read.segments, bounds),
        skipped: read.skipped,
    })
}
