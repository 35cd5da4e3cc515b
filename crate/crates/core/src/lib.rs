//! Clean-speech curation for large audio corpora.
//!
//! Each file is enhanced, speech-detected on the enhanced signal, cut into
//! fixed frames and scored by the level of the enhanced frame over the level
//! of the removed residual. Frames that clear both the SNR gate and the
//! bandwidth gate are tiled into fixed-length curated segments, which are
//! appended to a JSON-lines manifest with per-frame metadata.

pub mod audio;
pub mod curation;
pub mod dsp;
pub mod enhance;
pub mod evalgen;
pub mod exchange;
pub mod vad;

pub use audio::{read_wav, write_wav, AudioBuffer, FrameGrid, SampleFormat, SpeechMask};
pub use curation::{CuratedSegment, CurationConfig, Curator};
pub use enhance::{Enhancer, EnhancerSpec};
pub use vad::VadSpec;
