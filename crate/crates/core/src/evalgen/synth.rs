//! Deterministic speech-like test signals.
//!
//! The proxy alternates voiced stretches (0.3–0.7 s) with silent gaps
//! (80–250 ms). Voiced stretches carry a harmonic series on a wandering
//! fundamental plus breath noise that reaches 95% of Nyquist, so voiced
//! frames read as full-band to the cutoff estimator.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;

pub const F0_MIN_HZ: f64 = 90.0;
pub const F0_MAX_HZ: f64 = 250.0;
/// Output peak level, in dBFS.
pub const PEAK_DBFS: f64 = -6.0;
const HARMONIC_CEILING_HZ: f64 = 8000.0;
const BREATH_LO_HZ: f64 = 1000.0;
const BREATH_HI_FRACTION: f64 = 0.95;
/// Breath noise RMS relative to the harmonic part, in dB.
const BREATH_LEVEL_DB: f64 = -8.0;
const FADE_SECONDS: f64 = 0.01;

struct Stretch {
    start: usize,
    end: usize,
    f0_center: f64,
    f0_depth: f64,
    f0_rate: f64,
    f0_phase: f64,
}

/// Speech proxy of `duration` seconds. Same seed, same samples.
pub fn synth_clean(duration: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let fs = sample_rate as f64;
    let len = (duration.max(0.0) * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut stretches = Vec::new();
    let mut t = 0usize;
    while t < len {
        let voiced = (rng.random_range(0.3..0.7) * fs) as usize;
        let gap = (rng.random_range(0.08..0.25) * fs) as usize;
        stretches.push(Stretch {
            start: t,
            end: (t + voiced).min(len),
            f0_center: rng.random_range(115.0..200.0),
            f0_depth: rng.random_range(10.0..25.0),
            f0_rate: rng.random_range(1.5..5.0),
            f0_phase: rng.random_range(0.0..2.0 * PI),
        });
        t += voiced + gap;
    }

    let mut harmonic = vec![0.0; len];
    let mut envelope = vec![0.0; len];
    let fade = ((FADE_SECONDS * fs) as usize).max(1);
    let ceiling = HARMONIC_CEILING_HZ.min(0.45 * fs);
    for s in &stretches {
        let n_harm = ((ceiling / (s.f0_center + s.f0_depth)).floor() as usize).max(1);
        let mut phase = 0.0f64;
        let n = s.end - s.start;
        for i in 0..n {
            let time = i as f64 / fs;
            let f0 = (s.f0_center + s.f0_depth * (2.0 * PI * s.f0_rate * time + s.f0_phase).sin())
                .clamp(F0_MIN_HZ, F0_MAX_HZ);
            phase = (phase + 2.0 * PI * f0 / fs) % (2.0 * PI);
            // sum_k sin(k·phase)/sqrt(k) via a rotating phasor
            let step = Complex64::from_polar(1.0, phase);
            let mut z = step;
            let mut acc = 0.0;
            for k in 1..=n_harm {
                acc += z.im / (k as f64).sqrt();
                z *= step;
            }
            harmonic[s.start + i] = acc;
            let edge = i.min(n - 1 - i);
            envelope[s.start + i] = if edge < fade {
                0.5 - 0.5 * (PI * edge as f64 / fade as f64).cos()
            } else {
                1.0
            };
        }
    }

    let breath = band_noise(len, fs, BREATH_LO_HZ, BREATH_HI_FRACTION * fs / 2.0, &mut rng);
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    let h_rms = rms(&harmonic);
    let b_rms = rms(&breath);
    let breath_gain = if b_rms > 0.0 {
        h_rms * 10f64.powf(BREATH_LEVEL_DB / 20.0) / b_rms
    } else {
        0.0
    };
    let mut out: Vec<f64> = (0..len)
        .map(|i| envelope[i] * (harmonic[i] + breath_gain * breath[i]))
        .collect();
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let g = 10f64.powf(PEAK_DBFS / 20.0) / peak;
        out.iter_mut().for_each(|v| *v *= g);
    }
    AudioBuffer::new(out, sample_rate).expect("synthesized samples are finite")
}

/// Gaussian noise band-limited to `[lo_hz, hi_hz]` by zeroing FFT bins.
pub(crate) fn band_noise(len: usize, fs: f64, lo_hz: f64, hi_hz: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    shaped_noise(len, fs, rng, |f| if f >= lo_hz && f <= hi_hz { 1.0 } else { 0.0 })
}

/// Gaussian noise with amplitude response `gain(f_hz)` applied in the
/// frequency domain over the whole signal.
pub(crate) fn shaped_noise(
    len: usize,
    fs: f64,
    rng: &mut ChaCha8Rng,
    gain: impl Fn(f64) -> f64,
) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(len - k);
        *c *= gain(bin as f64 * fs / len as f64);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().map(|c| c.re / len as f64).collect()
}
