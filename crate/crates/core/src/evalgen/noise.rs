//! Noise generation and SNR-targeted mixing with Rayleigh-drawn SNRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::dsp::rms_db;

use super::synth::{shaped_noise, synth_clean};
use super::EvalError;

const BABBLE_TALKERS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    White,
    Pink,
    BabbleProxy,
}

impl std::str::FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "babble_proxy" | "babble" => Ok(NoiseKind::BabbleProxy),
            other => Err(format!("unknown noise kind `{other}` (white, pink, babble_proxy)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub noise_kind: NoiseKind,
    /// Scale of the Rayleigh distribution the target SNR (dB) is drawn from.
    pub rayleigh_sigma: f64,
    /// Drawn SNRs are clipped to `[min, max]` dB.
    pub snr_clip: [f64; 2],
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            noise_kind: NoiseKind::White,
            rayleigh_sigma: 15.0,
            snr_clip: [0.0, 60.0],
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.rayleigh_sigma.is_finite() && self.rayleigh_sigma > 0.0) {
            return Err(EvalError::InvalidSpec("rayleigh_sigma must be > 0".into()));
        }
        let [lo, hi] = self.snr_clip;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(EvalError::InvalidSpec(format!("snr_clip [{lo}, {hi}] must satisfy min < max")));
        }
        Ok(())
    }
}

/// One Rayleigh(σ) draw by inversion: `σ·sqrt(−2·ln(1 − u))`.
pub fn draw_rayleigh(rng: &mut impl Rng, sigma: f64) -> f64 {
    let u: f64 = rng.random();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

pub fn generate_noise(kind: NoiseKind, len: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fs = sample_rate as f64;
    match kind {
        NoiseKind::White => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
        // 1/f power above 20 Hz
        NoiseKind::Pink => shaped_noise(len, fs, rng, |f| if f < 20.0 { 0.0 } else { f.powf(-0.5) }),
        NoiseKind::BabbleProxy => {
            let duration = len as f64 / fs;
            let mut acc = vec![0.0; len];
            for _ in 0..BABBLE_TALKERS {
                let talker = synth_clean(duration, sample_rate, rng.random());
                let offset = rng.random_range(0..len.max(1));
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += talker.samples()[(i + offset) % len];
                }
            }
            acc
        }
    }
}

/// A clean signal mixed with scaled noise.
#[derive(Debug, Clone)]
pub struct NoisyMix {
    pub noisy: AudioBuffer,
    /// The scaled noise actually added.
    pub noise: Vec<f64>,
    pub target_snr_db: f64,
}

/// Scales `noise` so that `rms_db(clean) − rms_db(scaled) = snr_db` and adds it.
pub fn mix_at_snr(clean: &AudioBuffer, noise: &[f64], snr_db: f64) -> Result<NoisyMix, EvalError> {
    if noise.len() != clean.len() {
        return Err(EvalError::LengthMismatch {
            expected: clean.len(),
            actual: noise.len(),
        });
    }
    let clean_db = rms_db(clean.samples()).map_err(|_| EvalError::SilentReference)?;
    let noise_db = rms_db(noise).map_err(|_| EvalError::SilentReference)?;
    if clean_db <= -200.0 {
        return Err(EvalError::SilentReference);
    }
    if noise_db <= -200.0 {
        return Err(EvalError::InvalidSpec("noise is digital silence".into()));
    }
    let gain = 10f64.powf((clean_db - snr_db - noise_db) / 20.0);
    let scaled: Vec<f64> = noise.iter().map(|n| n * gain).collect();
    let noisy = clean.samples().iter().zip(&scaled).map(|(c, n)| c + n).collect();
    Ok(NoisyMix {
        noisy: AudioBuffer::new(noisy, clean.sample_rate()).expect("finite mix"),
        noise: scaled,
        target_snr_db: snr_db,
    })
}

/// Draws a target SNR from the Rayleigh distribution in `spec` (clipped), then
/// mixes freshly generated noise at that SNR. Fully determined by `spec.seed`.
pub fn inject_noise(clean: &AudioBuffer, spec: &NoiseSpec) -> Result<NoisyMix, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [lo, hi] = spec.snr_clip;
    let target = draw_rayleigh(&mut rng, spec.rayleigh_sigma).clamp(lo, hi);
    let noise = generate_noise(spec.noise_kind, clean.len(), clean.sample_rate(), &mut rng);
    mix_at_snr(clean, &noise, target)
}

/// Like [`inject_noise`] but with a fixed target SNR.
pub fn inject_noise_at(clean: &AudioBuffer, kind: NoiseKind, snr_db: f64, seed: u64) -> Result<NoisyMix, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = generate_noise(kind, clean.len(), clean.sample_rate(), &mut rng);
    mix_at_snr(clean, &noise, snr_db)
}
