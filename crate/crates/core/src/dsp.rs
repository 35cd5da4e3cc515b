//! Numeric kernels: RMS level, STFT/ISTFT and spectral cutoff estimation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Linear RMS floor applied before taking the log (−200 dB).
pub const RMS_FLOOR: f64 = 1e-10;
/// Magnitude floor for log spectra.
pub const MAG_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("cannot compute the level of an empty sequence")]
    Empty,
    #[error("signal of {len} samples is shorter than one {window_len}-sample window")]
    TooShort { len: usize, window_len: usize },
    #[error("invalid STFT config: {0}")]
    InvalidConfig(String),
    #[error("spectrogram/config mismatch: {0}")]
    Mismatch(String),
}

/// `20·log10(rms)` with the RMS floored at [`RMS_FLOOR`].
pub fn rms_db(samples: &[f64]) -> Result<f64, DspError> {
    if samples.is_empty() {
        return Err(DspError::Empty);
    }
    let ms = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    Ok(20.0 * ms.sqrt().max(RMS_FLOOR).log10())
}

/// Linear-interpolated percentile (`p` in `[0, 100]`) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self::with_window_len(2048)
    }
}

impl StftConfig {
    /// Config with the default quarter-window hop.
    pub fn with_window_len(window_len: usize) -> Self {
        Self {
            window_len,
            hop: window_len / 4,
            window: Window::Hann,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn validate(&self) -> Result<(), DspError> {
        if self.window_len < 4 || !self.window_len.is_multiple_of(2) {
            return Err(DspError::InvalidConfig(format!(
                "window_len {} must be even and >= 4",
                self.window_len
            )));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(DspError::InvalidConfig(format!(
                "hop {} must be in 1..={}",
                self.hop, self.window_len
            )));
        }
        // constant overlap-add of the window itself at this hop
        let w = self.window.coefficients(self.window_len);
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| w.iter().skip(n).step_by(self.hop).sum())
            .collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        if sums.iter().any(|s| (s - mean).abs() > 1e-9 * mean.max(1.0)) {
            return Err(DspError::InvalidConfig(format!(
                "{:?} window of {} is not COLA at hop {}",
                self.window, self.window_len, self.hop
            )));
        }
        Ok(())
    }

    /// Number of analysis steps for a signal of `len` samples (no padding).
    pub fn steps_for(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }
}

/// Complex one-sided STFT, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    n_bins: usize,
    n_steps: usize,
    window_len: usize,
    hop: usize,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn zeros(n_steps: usize, cfg: &StftConfig, sample_rate: u32) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); n_steps * cfg.n_bins()],
            n_bins: cfg.n_bins(),
            n_steps,
            window_len: cfg.window_len,
            hop: cfg.hop,
            sample_rate,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.window_len as f64
    }

    pub fn step(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn step_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn get(&self, t: usize, bin: usize) -> Complex64 {
        self.data[t * self.n_bins + bin]
    }

    /// Output length of [`istft`] for this spectrogram.
    pub fn signal_len(&self) -> usize {
        if self.n_steps == 0 {
            0
        } else {
            (self.n_steps - 1) * self.hop + self.window_len
        }
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    let mut planner = FftPlanner::new();
    Plans {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

/// Windowed, hop-strided transform of `samples`. Step `t` covers
/// `[t·hop, t·hop + window_len)`; no edge padding is applied.
pub fn stft(samples: &[f64], sample_rate: u32, cfg: &StftConfig) -> Result<Spectrogram, DspError> {
    cfg.validate()?;
    if samples.len() < cfg.window_len {
        return Err(DspError::TooShort {
            len: samples.len(),
            window_len: cfg.window_len,
        });
    }
    let n = cfg.window_len;
    let window = cfg.window.coefficients(n);
    let fft = plans(n).forward;
    let mut spec = Spectrogram::zeros(cfg.steps_for(samples.len()), cfg, sample_rate);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for t in 0..spec.n_steps {
        let start = t * cfg.hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(samples[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        let n_bins = spec.n_bins;
        spec.step_mut(t).copy_from_slice(&buf[..n_bins]);
    }
    Ok(spec)
}

/// Weighted overlap-add inverse: each step is inverse transformed, multiplied
/// by the synthesis window and summed, then every sample is divided by the
/// accumulated squared window. Samples with no window support come out as 0.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig) -> Result<Vec<f64>, DspError> {
    cfg.validate()?;
    if spec.window_len != cfg.window_len || spec.hop != cfg.hop || spec.n_bins != cfg.n_bins() {
        return Err(DspError::Mismatch(format!(
            "spectrogram window {}/hop {} vs config window {}/hop {}",
            spec.window_len, spec.hop, cfg.window_len, cfg.hop
        )));
    }
    let n = cfg.window_len;
    let window = cfg.window.coefficients(n);
    let ifft = plans(n).inverse;
    let out_len = spec.signal_len();
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let scale = 1.0 / n as f64;
    for t in 0..spec.n_steps {
        let half = spec.step(t);
        buf[..half.len()].copy_from_slice(half);
        // Hermitian mirror; DC and Nyquist imaginary parts are dropped.
        buf[0].im = 0.0;
        buf[n / 2].im = 0.0;
        for k in 1..n / 2 {
            buf[n - k] = half[k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * cfg.hop;
        for i in 0..n {
            out[start + i] += buf[i].re * scale * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        *o = if *w > 1e-8 { *o / w } else { 0.0 };
    }
    Ok(out)
}

/// Per-bin mean of `20·log10(max(|X|, MAG_FLOOR))` across time steps.
pub fn mean_log_magnitude(spec: &Spectrogram) -> Vec<f64> {
    let mut acc = vec![0.0; spec.n_bins()];
    for t in 0..spec.n_steps() {
        for (a, c) in acc.iter_mut().zip(spec.step(t)) {
            *a += 20.0 * c.norm().max(MAG_FLOOR).log10();
        }
    }
    let steps = spec.n_steps().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= steps);
    acc
}

pub const DEFAULT_ROLLOFF_DB: f64 = 35.0;

/// Cutoff frequency of a frame: the centre of the highest bin whose mean log
/// magnitude is within `rolloff_db` of the strongest bin. Returns 0 Hz for a
/// frame whose spectrum sits entirely at the magnitude floor.
pub fn estimate_cutoff(
    frame: &[f64],
    sample_rate: u32,
    cfg: &StftConfig,
    rolloff_db: f64,
) -> Result<f64, DspError> {
    let spec = stft(frame, sample_rate, cfg)?;
    let profile = mean_log_magnitude(&spec);
    let peak = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor_db = 20.0 * MAG_FLOOR.log10();
    if peak <= floor_db + 1e-9 {
        return Ok(0.0);
    }
    let threshold = peak - rolloff_db;
    let top = profile
        .iter()
        .rposition(|&m| m >= threshold)
        .unwrap_or(0);
    Ok(top as f64 * spec.bin_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rms_db_examples() {
        assert_eq!(rms_db(&[1.0; 64]).unwrap(), 0.0);
        let sine: Vec<f64> = (0..48000)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / 48000.0).sin())
            .collect();
        assert!((rms_db(&sine).unwrap() - (-3.0103)).abs() < 1e-3);
        assert_eq!(rms_db(&[0.0; 10]).unwrap(), -200.0);
        assert_eq!(rms_db(&[]), Err(DspError::Empty));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 50.0), Some(3.0));
        assert_eq!(percentile(&v, 100.0), Some(5.0));
        assert_eq!(percentile(&v, 10.0), Some(1.4));
        assert_eq!(percentile(&[], 10.0), None);
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::default().validate().is_ok());
        assert_eq!(StftConfig::default().hop, 512);
        let mut bad = StftConfig::default();
        bad.hop = 700;
        assert!(bad.validate().is_err());
        bad.hop = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dc_lands_in_bin_zero() {
        let cfg = StftConfig::with_window_len(256);
        let spec = stft(&[1.0; 1024], 8000, &cfg).unwrap();
        for t in 0..spec.n_steps() {
            let step = spec.step(t);
            let dc = step[0].norm();
            assert!((dc - 128.0).abs() < 1e-9);
            // periodic Hann leaks DC only into bin 1
            assert!(step[2..].iter().all(|c| c.norm() < 1e-9));
        }
    }

    #[test]
    fn bin_centred_tone_peaks_at_its_bin() {
        let cfg = StftConfig::with_window_len(512);
        let k = 37;
        let f = k as f64 * 16000.0 / 512.0;
        let x: Vec<f64> = (0..4000)
            .map(|i| (2.0 * PI * f * i as f64 / 16000.0).sin())
            .collect();
        let spec = stft(&x, 16000, &cfg).unwrap();
        for t in 0..spec.n_steps() {
            let step = spec.step(t);
            let argmax = (0..step.len())
                .max_by(|&a, &b| step[a].norm().total_cmp(&step[b].norm()))
                .unwrap();
            assert_eq!(argmax, k);
        }
    }

    #[test]
    fn step_count_arithmetic() {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..48000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec = stft(&x, 48000, &cfg).unwrap();
        assert_eq!(spec.n_steps(), (48000 - 2048) / 512 + 1);
        assert!(stft(&x[..2047], 48000, &cfg).is_err());
    }

    #[test]
    fn zero_spectrogram_inverts_to_zeros() {
        let cfg = StftConfig::default();
        let spec = Spectrogram::zeros(10, &cfg, 48000);
        let out = istft(&spec, &cfg).unwrap();
        assert_eq!(out.len(), 9 * 512 + 2048);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn istft_rejects_mismatched_config() {
        let cfg = StftConfig::default();
        let spec = Spectrogram::zeros(3, &cfg, 48000);
        assert!(matches!(
            istft(&spec, &StftConfig::with_window_len(1024)),
            Err(DspError::Mismatch(_))
        ));
    }

    fn interior_rel_error(x: &[f64], y: &[f64], edge: usize) -> f64 {
        let end = y.len().min(x.len()) - edge;
        let num = (edge..end).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
        let den = (edge..end).map(|i| x[i].abs()).fold(0.0, f64::max);
        num / den
    }

    #[test]
    fn round_trip_tone() {
        let cfg = StftConfig::default();
        let x: Vec<f64> = (0..48000)
            .map(|i| 0.5 * (2.0 * PI * 440.0 * i as f64 / 48000.0).sin())
            .collect();
        let y = istft(&stft(&x, 48000, &cfg).unwrap(), &cfg).unwrap();
        assert!(interior_rel_error(&x, &y, cfg.window_len) < 1e-6);
    }

    #[test]
    fn cutoff_of_silence_is_zero() {
        let cfg = StftConfig::default();
        assert_eq!(estimate_cutoff(&[0.0; 48000], 48000, &cfg, 35.0).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_of_white_noise_is_near_nyquist() {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..48000).map(|_| rng.random_range(-0.5..0.5)).collect();
        let fc = estimate_cutoff(&x, 48000, &cfg, DEFAULT_ROLLOFF_DB).unwrap();
        assert!(fc >= 0.95 * 24000.0, "fc = {fc}");
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest};

        proptest! {
            #[test]
            fn rms_db_scale_covariance(seed in any::<u64>(), c in 1e-3f64..1e3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<f64> = (0..257).map(|_| rng.random_range(-1.0..1.0)).collect();
                let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
                let lhs = rms_db(&scaled).unwrap();
                let rhs = rms_db(&x).unwrap() + 20.0 * c.log10();
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }
        }
    }
}
