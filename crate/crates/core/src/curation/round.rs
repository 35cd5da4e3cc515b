//! Corpus-level rounds: curate every file, append to the manifest, report.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CurationConfig;
use super::engine::Curator;
use super::histogram::{RhoHistogram, DEFAULT_BIN_WIDTH_DB};
use super::manifest::{CuratedSegment, ManifestWriter};
use super::CurationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub source_uri: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round_id: u32,
    pub config_hash: String,
    pub enhancer_id: String,
    pub files_total: usize,
    pub files_processed: usize,
    pub files_failed: usize,
    pub failures: Vec<FailureRecord>,
    pub segments: usize,
    pub curated_seconds: f64,
    pub rho_histogram: RhoHistogram,
}

/// Where [`run_round`] writes the report for `manifest`.
pub fn report_path(manifest: &Path, round_id: u32) -> PathBuf {
    let mut name = manifest
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".round-{round_id}.report.json"));
    manifest.with_file_name(name)
}

pub fn run_round(
    corpus: &[PathBuf],
    cfg: &CurationConfig,
    manifest_out: &Path,
) -> Result<RoundReport, CurationError> {
    run_round_with(&Curator::new(cfg.clone())?, corpus, manifest_out)
}

/// Curates `corpus` in parallel on the current rayon pool. Records are
/// appended in corpus order; failing files become [`FailureRecord`]s.
pub fn run_round_with(
    curator: &Curator,
    corpus: &[PathBuf],
    manifest_out: &Path,
) -> Result<RoundReport, CurationError> {
    let cfg = curator.config();
    let mut writer = ManifestWriter::open(manifest_out)?;

    let results: Vec<Result<Vec<CuratedSegment>, String>> = corpus
        .par_iter()
        .map(|path| {
            curator
                .curate_path(path)
                .map(|c| c.segments)
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut failures = Vec::new();
    let mut emitted: Vec<CuratedSegment> = Vec::new();
    for (path, result) in corpus.iter().zip(results) {
        match result {
            Ok(segments) => {
                for seg in &segments {
                    writer.append(seg)?;
                }
                emitted.extend(segments);
            }
            Err(reason) => {
                log::warn!("{}: {reason}", path.display());
                failures.push(FailureRecord {
                    source_uri: path.display().to_string(),
                    reason,
                });
            }
        }
    }
    writer.flush()?;

    let report = RoundReport {
        round_id: cfg.round_id,
        config_hash: curator.config_hash().to_string(),
        enhancer_id: curator.enhancer_id(),
        files_total: corpus.len(),
        files_processed: corpus.len() - failures.len(),
        files_failed: failures.len(),
        failures,
        segments: emitted.len(),
        curated_seconds: emitted.iter().map(|s| s.len_samples()).sum::<u64>() as f64
            / cfg.sample_rate as f64,
        rho_histogram: RhoHistogram::from_values(
            emitted.iter().flat_map(|s| s.frame_rho.iter().copied()),
            DEFAULT_BIN_WIDTH_DB,
        ),
    };
    let path = report_path(manifest_out, cfg.round_id);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CurationError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(report)
}
