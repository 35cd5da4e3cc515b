//! Per-frame residual SNR, the SNR and bandwidth gates, and segment tiling.

use std::ops::Deref;

use crate::audio::{speech_fraction, FrameGrid};
use crate::dsp::{estimate_cutoff, rms_db, DspError, StftConfig};

use super::CurationError;

/// Stand-in for −∞ in frame scores, chosen to survive text serialization.
pub const NEG_INF_SENTINEL: f64 = -1e9;

pub fn is_neg_inf(rho: f64) -> bool {
    rho <= NEG_INF_SENTINEL
}

macro_rules! seq_newtype {
    ($(#[$m:meta])* $name:ident, $t:ty) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<$t>);

        impl $name {
            pub fn into_inner(self) -> Vec<$t> {
                self.0
            }
        }

        impl From<Vec<$t>> for $name {
            fn from(v: Vec<$t>) -> Self {
                Self(v)
            }
        }

        impl Deref for $name {
            type Target = [$t];
            fn deref(&self) -> &[$t] {
                &self.0
            }
        }
    };
}

seq_newtype!(
    /// Residual SNR per frame, in dB; may hold [`NEG_INF_SENTINEL`].
    RhoVector,
    f64
);
seq_newtype!(
    /// One pass/fail decision per frame.
    AcceptanceVector,
    bool
);
seq_newtype!(
    /// Estimated cutoff frequency per frame, in Hz.
    BandwidthProfile,
    f64
);

/// Residual SNR of one frame: level of the enhanced frame minus level of
/// `input − enhanced`, capped at `rho_max`. Frames where fewer than half of
/// the samples are speech score [`NEG_INF_SENTINEL`].
pub fn rho_hat(
    input: &[f64],
    enhanced: &[f64],
    speech: &[bool],
    rho_max: f64,
) -> Result<f64, CurationError> {
    if input.len() != enhanced.len() || input.len() != speech.len() {
        return Err(CurationError::LengthMismatch(format!(
            "frame lengths input {} / enhanced {} / mask {}",
            input.len(),
            enhanced.len(),
            speech.len()
        )));
    }
    if speech_fraction(speech) < 0.5 {
        return Ok(NEG_INF_SENTINEL);
    }
    let residual: Vec<f64> = input.iter().zip(enhanced).map(|(x, y)| x - y).collect();
    let rho = rms_db(enhanced)? - rms_db(&residual)?;
    Ok(rho.min(rho_max))
}

/// Scores every column of the three aligned grids.
pub fn rho_per_frame(
    input: &FrameGrid,
    enhanced: &FrameGrid,
    speech: &FrameGrid<bool>,
    rho_max: f64,
) -> Result<RhoVector, CurationError> {
    if input.frame_count() != enhanced.frame_count() || input.frame_count() != speech.frame_count() {
        return Err(CurationError::LengthMismatch(format!(
            "frame counts {} / {} / {}",
            input.frame_count(),
            enhanced.frame_count(),
            speech.frame_count()
        )));
    }
    (0..input.frame_count())
        .map(|l| rho_hat(input.column(l), enhanced.column(l), speech.column(l), rho_max))
        .collect::<Result<Vec<_>, _>>()
        .map(RhoVector)
}

/// Strictly-above threshold test per frame.
pub fn snr_gate(rho: &[f64], threshold_db: f64) -> AcceptanceVector {
    AcceptanceVector(rho.iter().map(|&r| r > threshold_db).collect())
}

/// Inclusive cutoff test per frame of the enhanced grid; also returns the
/// measured cutoffs.
pub fn bandwidth_gate(
    enhanced: &FrameGrid,
    sample_rate: u32,
    bandwidth_hz: f64,
    stft: &StftConfig,
    rolloff_db: f64,
) -> Result<(AcceptanceVector, BandwidthProfile), DspError> {
    let cutoffs = enhanced
        .columns()
        .map(|col| estimate_cutoff(col, sample_rate, stft, rolloff_db))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = cutoffs.iter().map(|&fc| fc >= bandwidth_hz).collect();
    Ok((AcceptanceVector(pass), BandwidthProfile(cutoffs)))
}

pub fn combine(snr: &[bool], bandwidth: &[bool]) -> Result<AcceptanceVector, CurationError> {
    if snr.len() != bandwidth.len() {
        return Err(CurationError::LengthMismatch(format!(
            "acceptance vectors of length {} and {}",
            snr.len(),
            bandwidth.len()
        )));
    }
    Ok(AcceptanceVector(
        snr.iter().zip(bandwidth).map(|(&s, &b)| s && b).collect(),
    ))
}

/// Tiles each maximal run of accepted frames with back-to-back blocks of
/// `k` frames, starting at the run's first frame. Returns half-open
/// `(start_frame, end_frame)` pairs; run tails shorter than `k` are unused.
pub fn extract_segments(accepted: &[bool], k: usize) -> Vec<(usize, usize)> {
    assert!(k >= 1, "segment length must be at least one frame");
    let mut out = Vec::new();
    let mut run_start = None;
    for i in 0..=accepted.len() {
        let on = accepted.get(i).copied().unwrap_or(false);
        match (on, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                let blocks = (i - start) / k;
                out.extend((0..blocks).map(|b| (start + b * k, start + (b + 1) * k)));
                run_start = None;
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rho_hat_examples() {
        let enhanced = vec![0.1; 480];
        let input: Vec<f64> = enhanced.iter().map(|e| e + 0.001).collect();
        let rho = rho_hat(&input, &enhanced, &[true; 480], 100.0).unwrap();
        assert!((rho - 40.0).abs() < 1e-9, "{rho}");

        let mut mask = vec![false; 10];
        mask[..4].iter_mut().for_each(|m| *m = true);
        assert_eq!(
            rho_hat(&[0.5; 10], &[0.5; 10], &mask, 100.0).unwrap(),
            NEG_INF_SENTINEL
        );

        // identity: zero residual hits the RMS floor, then the cap
        assert_eq!(rho_hat(&[0.3; 10], &[0.3; 10], &[true; 10], 100.0).unwrap(), 100.0);

        assert!(rho_hat(&[0.3; 10], &[0.3; 9], &[true; 10], 100.0).is_err());
    }

    #[test]
    fn half_speech_is_enough() {
        let mut mask = vec![false; 10];
        mask[..5].iter_mut().for_each(|m| *m = true);
        assert_ne!(rho_hat(&[0.5; 10], &[0.4; 10], &mask, 100.0).unwrap(), NEG_INF_SENTINEL);
    }

    #[test]
    fn snr_gate_is_strict() {
        let rho = [25.0, 20.0, 19.9, NEG_INF_SENTINEL];
        assert_eq!(&*snr_gate(&rho, 20.0), &[true, false, false, false]);
        assert_eq!(&*snr_gate(&[100.0; 3], 20.0), &[true; 3]);
        assert!(snr_gate(&[], 20.0).is_empty());
    }

    #[test]
    fn combine_examples() {
        assert_eq!(
            &*combine(&[true, false, true], &[true, true, false]).unwrap(),
            &[true, false, false]
        );
        let s = [true, false, true, true];
        assert_eq!(&*combine(&s, &[true; 4]).unwrap(), &s);
        assert_eq!(&*combine(&[false; 4], &[true, false, true, false]).unwrap(), &[false; 4]);
        assert!(combine(&[true], &[true, true]).is_err());
    }

    #[test]
    fn extract_examples() {
        assert_eq!(extract_segments(&[true; 12], 12), vec![(0, 12)]);
        assert_eq!(
            extract_segments(&[true, true, true, true, true, false], 2),
            vec![(0, 2), (2, 4)]
        );
        assert!(extract_segments(&[true; 11], 12).is_empty());
        assert!(extract_segments(&[], 3).is_empty());
        assert_eq!(
            extract_segments(&[false, true, true, false, true, true, true], 2),
            vec![(1, 3), (4, 6)]
        );
    }

    proptest! {
        #[test]
        fn segments_cover_only_accepted_frames(a in proptest::collection::vec(any::<bool>(), 0..300), k in 1usize..15) {
            let segs = extract_segments(&a, k);
            let mut last_end = 0;
            for &(s, e) in &segs {
                prop_assert_eq!(e - s, k);
                prop_assert!(s >= last_end);
                prop_assert!(a[s..e].iter().all(|&x| x));
                last_end = e;
            }
        }

        #[test]
        fn raising_threshold_never_adds_frames(rho in proptest::collection::vec(-50.0f64..100.0, 0..100), t in -10.0f64..60.0, dt in 0.0f64..30.0) {
            let lo = snr_gate(&rho, t).iter().filter(|&&x| x).count();
            let hi = snr_gate(&rho, t + dt).iter().filter(|&&x| x).count();
            prop_assert!(hi <= lo);
        }
    }
}
