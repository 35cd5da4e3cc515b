//! A/B clip export: the unprocessed and enhanced version of each segment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::audio::{read_wav, write_wav, SampleFormat};
use crate::enhance::{enhance_with, Enhancer};

use super::manifest::{read_manifest, CuratedSegment};
use super::CurationError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    pub pairs: usize,
    /// Segments whose source file could not be read.
    pub missing_source: usize,
    /// Segments recorded with a different enhancer than the one supplied.
    pub enhancer_mismatch: usize,
    /// Segments that no longer fit their source (rate or length changed) or
    /// whose enhancement failed.
    pub failed: usize,
}

/// Paired output names for the `index`-th segment.
pub fn pair_paths(out_dir: &Path, index: usize, seg: &CuratedSegment) -> (PathBuf, PathBuf) {
    let stem = Path::new(&seg.source_uri)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "segment".into());
    let base = format!("{index:05}_{stem}_{}-{}", seg.start_sample, seg.end_sample);
    (
        out_dir.join(format!("{base}_A_unprocessed.wav")),
        out_dir.join(format!("{base}_B_enhanced.wav")),
    )
}

/// Writes one unprocessed/enhanced float-32 pair per segment. Each source is
/// read and enhanced once, as a whole file, then sliced.
pub fn export_ab_pairs(
    segments: &[CuratedSegment],
    enhancer: &dyn Enhancer,
    out_dir: &Path,
) -> Result<ExportSummary, CurationError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CurationError::Io {
        path: out_dir.display().to_string(),
        reason: e.to_string(),
    })?;
    let enhancer_id = enhancer.id();
    let mut summary = ExportSummary::default();

    let mut by_source: BTreeMap<&str, Vec<(usize, &CuratedSegment)>> = BTreeMap::new();
    for (i, seg) in segments.iter().enumerate() {
        if seg.enhancer_id != enhancer_id {
            log::warn!(
                "segment {i} of {} was curated with `{}`, not `{enhancer_id}`; skipped",
                seg.source_uri,
                seg.enhancer_id
            );
            summary.enhancer_mismatch += 1;
            continue;
        }
        by_source.entry(seg.source_uri.as_str()).or_default().push((i, seg));
    }

    for (source, segs) in by_source {
        let path = Path::new(source);
        let input = match read_wav(path) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{e}; {} pair(s) skipped", segs.len());
                summary.missing_source += segs.len();
                continue;
            }
        };
        let enhanced = match enhance_with(enhancer, &input, Some(path)) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{source}: enhancement failed: {e}");
                summary.failed += segs.len();
                continue;
            }
        };
        for (i, seg) in segs {
            let (start, end) = (seg.start_sample as usize, seg.end_sample as usize);
            if input.sample_rate() != seg.sample_rate || end > input.len() {
                log::warn!("{source}: segment [{start}, {end}) no longer fits the source");
                summary.failed += 1;
                continue;
            }
            let (a, b) = pair_paths(out_dir, i, seg);
            write_wav(&a, &input.slice(start, end), SampleFormat::Float32)?;
            write_wav(&b, &enhanced.slice(start, end), SampleFormat::Float32)?;
            summary.pairs += 1;
        }
    }
    Ok(summary)
}

pub fn export_ab_pairs_from_manifest(
    manifest: &Path,
    enhancer: &dyn Enhancer,
    out_dir: &Path,
) -> Result<ExportSummary, CurationError> {
    let read = read_manifest(manifest)?;
    export_ab_pairs(&read.segments, enhancer, out_dir)
}
