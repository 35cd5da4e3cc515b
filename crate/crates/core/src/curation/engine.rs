//! Single-file curation: enhance, detect speech, frame, score, gate, tile.

use std::path::Path;

use crate::audio::{read_wav, reshape_frames, reshape_mask, AudioBuffer, SpeechMask};
use crate::enhance::{enhance_with, Enhancer};
use crate::vad::{detect, external_detect, VadSpec};

use super::config::CurationConfig;
use super::manifest::CuratedSegment;
use super::scoring::{
    bandwidth_gate, combine, extract_segments, rho_per_frame, snr_gate, AcceptanceVector,
    BandwidthProfile, RhoVector,
};
use super::CurationError;

/// Everything computed for one file.
#[derive(Debug, Clone)]
pub struct FileCuration {
    pub segments: Vec<CuratedSegment>,
    pub enhanced: AudioBuffer,
    pub speech: SpeechMask,
    pub rho: RhoVector,
    pub cutoff: BandwidthProfile,
    pub snr_pass: AcceptanceVector,
    pub bandwidth_pass: AcceptanceVector,
    pub accepted: AcceptanceVector,
}

/// A validated config bound to a built enhancer.
pub struct Curator {
    cfg: CurationConfig,
    enhancer: Box<dyn Enhancer>,
    config_hash: String,
}

impl Curator {
    pub fn new(cfg: CurationConfig) -> Result<Self, CurationError> {
        cfg.validate()?;
        let enhancer = cfg.enhancer.build(cfg.stft)?;
        Ok(Self::assemble(cfg, enhancer))
    }

    /// Uses `enhancer` in place of the one named by `cfg.enhancer`.
    pub fn with_enhancer(
        cfg: CurationConfig,
        enhancer: Box<dyn Enhancer>,
    ) -> Result<Self, CurationError> {
        cfg.validate()?;
        Ok(Self::assemble(cfg, enhancer))
    }

    fn assemble(cfg: CurationConfig, enhancer: Box<dyn Enhancer>) -> Self {
        let config_hash = cfg.config_hash();
        Self {
            cfg,
            enhancer,
            config_hash,
        }
    }

    pub fn config(&self) -> &CurationConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn enhancer(&self) -> &dyn Enhancer {
        self.enhancer.as_ref()
    }

    pub fn enhancer_id(&self) -> String {
        self.enhancer.id()
    }

    pub fn curate_path(&self, path: &Path) -> Result<FileCuration, CurationError> {
        let buf = read_wav(path)?;
        self.curate(&buf, path)
    }

    pub fn curate(&self, input: &AudioBuffer, source: &Path) -> Result<FileCuration, CurationError> {
        let cfg = &self.cfg;
        input.ensure_rate(cfg.sample_rate)?;

        let enhanced = enhance_with(self.enhancer.as_ref(), input, Some(source))?;
        // speech decisions come from the enhanced signal
        let speech = match &cfg.vad {
            VadSpec::External {
                command,
                exchange_dir,
                timeout_secs,
            } => external_detect(
                &enhanced,
                command,
                exchange_dir,
                std::time::Duration::from_secs(*timeout_secs),
                Some(source),
            )?,
            spec => detect(&enhanced, spec)?,
        };
        if speech.len() != input.len() {
            return Err(CurationError::LengthMismatch(format!(
                "speech mask has {} samples, input has {}",
                speech.len(),
                input.len()
            )));
        }

        let x = reshape_frames(input, cfg.frame_seconds)?;
        let xhat = reshape_frames(&enhanced, cfg.frame_seconds)?;
        let v = reshape_mask(&speech, cfg.sample_rate, cfg.frame_seconds)?;

        let rho = rho_per_frame(&x, &xhat, &v, cfg.rho_max_db)?;
        let snr_pass = snr_gate(&rho, cfg.snr_threshold_db);
        let (bandwidth_pass, cutoff) = bandwidth_gate(
            &xhat,
            cfg.sample_rate,
            cfg.bandwidth_hz,
            &cfg.stft,
            cfg.rolloff_db,
        )?;
        let accepted = combine(&snr_pass, &bandwidth_pass)?;

        let frame_len = cfg.frame_len() as u64;
        let source_uri = source.display().to_string();
        let enhancer_id = self.enhancer.id();
        let segments = extract_segments(&accepted, cfg.frames_per_segment())
            .into_iter()
            .map(|(start, end)| {
                let seg = CuratedSegment {
                    source_uri: source_uri.clone(),
                    round_id: cfg.round_id,
                    start_sample: start as u64 * frame_len,
                    end_sample: end as u64 * frame_len,
                    sample_rate: cfg.sample_rate,
                    frame_rho: rho[start..end].to_vec(),
                    frame_fc: cutoff[start..end].to_vec(),
                    config_hash: self.config_hash.clone(),
                    enhancer_id: enhancer_id.clone(),
                };
                seg.validate_against(cfg).map(|_| seg)
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(FileCuration {
            segments,
            enhanced,
            speech,
            rho,
            cutoff,
            snr_pass,
            bandwidth_pass,
            accepted,
        })
    }
}

/// Curates one in-memory buffer with the enhancer named by `cfg`.
pub fn curate_file(input: &AudioBuffer, cfg: &CurationConfig) -> Result<FileCuration, CurationError> {
    Curator::new(cfg.clone())?.curate(input, Path::new("<memory>"))
}
