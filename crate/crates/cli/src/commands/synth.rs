use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use secp_core::dsp::rms_db;
use secp_core::evalgen::{inject_noise, synth_clean, NoiseKind, NoiseSpec};
use secp_core::{write_wav, AudioBuffer, SampleFormat};

use super::write_json;
use crate::{Exit, SynthArgs};

/// Highest peak written; pairs above it are scaled down together.
const MAX_PEAK: f64 = 0.99;

#[derive(Debug, Serialize)]
struct Metadata {
    sample_rate: u32,
    duration_seconds: f64,
    seed: u64,
    noise: NoiseKind,
    rayleigh_sigma: f64,
    snr_clip: [f64; 2],
    files: Vec<FileMeta>,
}

#[derive(Debug, Serialize)]
struct FileMeta {
    file: String,
    clean_seed: u64,
    noise_seed: u64,
    target_snr_db: f64,
    realized_snr_db: f64,
    /// Gain applied to both signals to keep the mix below clipping.
    gain: f64,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let noise: NoiseKind = args.noise.parse().map_err(Exit::Config)?;
    if !(args.duration > 0.0) || args.sample_rate == 0 {
        return Err(Exit::Config("duration and sample-rate must be positive".into()).into());
    }
    let base = NoiseSpec {
        noise_kind: noise,
        rayleigh_sigma: args.sigma,
        snr_clip: [args.snr_min, args.snr_max],
        seed: 0,
    };
    base.validate().map_err(|e| Exit::Config(e.to_string()))?;

    let clean_dir = args.out.join("clean");
    let noisy_dir = args.out.join("noisy");
    for d in [&clean_dir, &noisy_dir] {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let seeds: Vec<(u64, u64)> = (0..args.count).map(|_| (rng.random(), rng.random())).collect();
    let files = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &(clean_seed, noise_seed))| -> Result<FileMeta> {
            let file = format!("{i:04}.wav");
            let clean = synth_clean(args.duration, args.sample_rate, clean_seed);
            let mix = inject_noise(&clean, &NoiseSpec { seed: noise_seed, ..base.clone() })?;
            let peak = mix.noisy.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let gain = if peak > MAX_PEAK { MAX_PEAK / peak } else { 1.0 };
            let scale = |b: &AudioBuffer| {
                AudioBuffer::new(b.samples().iter().map(|v| v * gain).collect(), b.sample_rate())
                    .expect("scaled samples stay finite")
            };
            let (clean, noisy) = (scale(&clean), scale(&mix.noisy));
            write_wav(clean_dir.join(&file), &clean, SampleFormat::Float32)?;
            write_wav(noisy_dir.join(&file), &noisy, SampleFormat::Float32)?;
            let added: Vec<f64> = noisy.samples().iter().zip(clean.samples()).map(|(y, c)| y - c).collect();
            Ok(FileMeta {
                file,
                clean_seed,
                noise_seed,
                target_snr_db: mix.target_snr_db,
                realized_snr_db: rms_db(clean.samples())? - rms_db(&added)?,
                gain,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    write_json(
        &args.out.join("metadata.json"),
        &Metadata {
            sample_rate: args.sample_rate,
            duration_seconds: args.duration,
            seed: args.seed,
            noise,
            rayleigh_sigma: args.sigma,
            snr_clip: base.snr_clip,
            files,
        },
    )?;
    log::info!("{} pair(s) written to {}", args.count, args.out.display());
    Ok(())
}
