//! Helpers shared by the integration test targets. Everything here is
//! written independently of the library code it is used to check.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use secp_core::{write_wav, AudioBuffer, SampleFormat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Level in dB computed the long way: power sum in f64, then 10·log10.
pub fn level_db(x: &[f64]) -> f64 {
    let p = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    10.0 * p.max(1e-20).log10()
}

/// Zeroes every FFT bin above `cutoff_hz`. Stopband attenuation is
/// unbounded, well beyond any finite rolloff requirement.
pub fn brickwall_lowpass(x: &[f64], sample_rate: u32, cutoff_hz: f64) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * sample_rate as f64 / n as f64;
        if f > cutoff_hz {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Reference run tiler: list the maximal runs first, then cut each into
/// as many whole blocks of `k` as fit.
pub fn brute_force_tiles(accepted: &[bool], k: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < accepted.len() {
        if accepted[i] {
            let mut j = i;
            while j < accepted.len() && accepted[j] {
                j += 1;
            }
            runs.push((i, j));
            i = j;
        } else {
            i += 1;
        }
    }
    let mut out = Vec::new();
    for (s, e) in runs {
        let mut b = s;
        while b + k <= e {
            out.push((b, b + k));
            b += k;
        }
    }
    out
}

pub fn write_f32(dir: &Path, name: &str, samples: Vec<f64>, sample_rate: u32) -> PathBuf {
    let path = dir.join(name);
    write_wav(&path, &AudioBuffer::new(samples, sample_rate).unwrap(), SampleFormat::Float32).unwrap();
    path
}

/// Rounds through float32 so in-memory buffers match what a WAV holds.
pub fn as_f32(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v as f32 as f64).collect()
}
