//! Cross-round reports over one or more manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curation::histogram::{RhoHistogram, DEFAULT_BIN_WIDTH_DB};
use crate::curation::manifest::{read_manifest, CuratedSegment, ManifestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundHours {
    pub round_id: u32,
    pub segments: usize,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundHistogram {
    pub round_id: u32,
    pub histogram: RhoHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub accepted_hours: Vec<RoundHours>,
    pub rho_histograms: Vec<RoundHistogram>,
    pub skipped_records: usize,
}

fn load_all(manifests: &[impl AsRef<Path>]) -> Result<(Vec<CuratedSegment>, usize), ManifestError> {
    let mut segments = Vec::new();
    let mut skipped = 0;
    for m in manifests {
        let read = read_manifest(m)?;
        segments.extend(read.segments);
        skipped += read.skipped;
    }
    Ok((segments, skipped))
}

/// Curated hours per round: Σ(end − start) / sample_rate / 3600.
pub fn accepted_hours_of(segments: &[CuratedSegment]) -> Vec<RoundHours> {
    // exact sample totals per (round, rate) before any division
    let mut samples: BTreeMap<u32, BTreeMap<u32, (u128, usize)>> = BTreeMap::new();
    for s in segments {
        let e = samples.entry(s.round_id).or_default().entry(s.sample_rate).or_default();
        e.0 += s.len_samples() as u128;
        e.1 += 1;
    }
    samples
        .into_iter()
        .map(|(round_id, by_rate)| RoundHours {
            round_id,
            segments: by_rate.values().map(|(_, n)| n).sum(),
            hours: by_rate
                .iter()
                .map(|(&rate, &(n, _))| n as f64 / rate as f64 / 3600.0)
                .sum(),
        })
        .collect()
}

pub fn rho_histogram_of(segments: &[CuratedSegment], bin_width_db: f64) -> Vec<RoundHistogram> {
    let mut by_round: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for s in segments {
        by_round.entry(s.round_id).or_default().extend(&s.frame_rho);
    }
    by_round
        .into_iter()
        .map(|(round_id, values)| RoundHistogram {
            round_id,
            histogram: RhoHistogram::from_values(values, bin_width_db),
        })
        .collect()
}

pub fn accepted_hours(manifests: &[impl AsRef<Path>]) -> Result<Vec<RoundHours>, ManifestError> {
    Ok(accepted_hours_of(&load_all(manifests)?.0))
}

pub fn rho_histogram(
    manifests: &[impl AsRef<Path>],
    bin_width_db: f64,
) -> Result<Vec<RoundHistogram>, ManifestError> {
    Ok(rho_histogram_of(&load_all(manifests)?.0, bin_width_db))
}

pub fn build_report(manifests: &[impl AsRef<Path>]) -> Result<CurationReport, ManifestError> {
    let (segments, skipped_records) = load_all(manifests)?;
    Ok(CurationReport {
        accepted_hours: accepted_hours_of(&segments),
        rho_histograms: rho_histogram_of(&segments, DEFAULT_BIN_WIDTH_DB),
        skipped_records,
    })
}

impl CurationReport {
    /// One row per round with its hours, then one row per histogram bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,round_id,lo_db,hi_db,value\n");
        for h in &self.accepted_hours {
            let _ = writeln!(out, "hours,{},,,{}", h.round_id, h.hours);
        }
        for r in &self.rho_histograms {
            if r.histogram.neg_inf > 0 {
                let _ = writeln!(out, "rho,{},-inf,-inf,{}", r.round_id, r.histogram.neg_inf);
            }
            for b in &r.histogram.bins {
                let _ = writeln!(out, "rho,{},{},{},{}", r.round_id, b.lo_db, b.hi_db, b.count);
            }
        }
        out
    }
}
