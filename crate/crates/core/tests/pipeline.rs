mod common;

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use secp_core::curation::{
    combine, curate_file, export_ab_pairs, extract_segments, read_manifest, report_path,
    run_round, snr_gate, CurationConfig, Curator, RoundReport,
};
use secp_core::enhance::{IdentityEnhancer, OracleEnhancer};
use secp_core::evalgen::{inject_noise, inject_noise_at, synth_clean, NoiseKind, NoiseSpec};
use secp_core::{read_wav, AudioBuffer, EnhancerSpec, VadSpec};

use common::{as_f32, gaussian, level_db, rng, write_f32};

const FS: u32 = 48_000;

/// Writes `count` noisy files to `dir/corpus` and their clean references,
/// under the same file names, to `dir/clean`.
fn noisy_corpus(dir: &Path, count: usize, seconds: f64) -> Vec<PathBuf> {
    let (corpus, clean) = (dir.join("corpus"), dir.join("clean"));
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::create_dir_all(&clean).unwrap();
    (0..count)
        .map(|i| {
            let name = format!("{i:03}.wav");
            let x = AudioBuffer::new(as_f32(synth_clean(seconds, FS, 50 + i as u64).samples()), FS).unwrap();
            let mix = inject_noise_at(&x, NoiseKind::White, 40.0, i as u64).unwrap();
            write_f32(&clean, &name, x.into_samples(), FS);
            write_f32(&corpus, &name, mix.noisy.into_samples(), FS)
        })
        .collect()
}

fn oracle_config(dir: &Path) -> CurationConfig {
    CurationConfig {
        enhancer: EnhancerSpec::Oracle {
            reference_dir: dir.join("clean"),
        },
        round_id: 1,
        ..Default::default()
    }
}

#[test]
fn round_of_ten_files_curates_four_minutes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = noisy_corpus(dir.path(), 10, 24.0);
    let manifest = dir.path().join("out/manifest.jsonl");
    std::fs::create_dir_all(manifest.parent().unwrap()).unwrap();
    let report = run_round(&corpus, &oracle_config(dir.path()), &manifest).unwrap();
    assert_eq!(report.files_processed, 10);
    assert_eq!(report.segments, 20);
    assert_eq!(report.curated_seconds, 240.0);
    assert_eq!(report.rho_histogram.total, 240);

    let read = read_manifest(&manifest).unwrap();
    assert_eq!(read.segments.len(), 20);
    for (i, pair) in read.segments.chunks(2).enumerate() {
        assert_eq!(pair[0].source_uri, corpus[i].display().to_string());
        assert_eq!((pair[0].start_sample, pair[1].start_sample), (0, 12 * FS as u64));
        assert!(pair.iter().all(|s| s.round_id == 1));
    }
    let written: RoundReport =
        serde_json::from_str(&std::fs::read_to_string(report_path(&manifest, 1)).unwrap()).unwrap();
    assert_eq!(written, report);
}

#[test]
fn rerun_to_a_fresh_path_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = noisy_corpus(dir.path(), 3, 13.0);
    let cfg = oracle_config(dir.path());
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    run_round(&corpus, &cfg, &a).unwrap();
    run_round(&corpus, &cfg, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!std::fs::read(&a).unwrap().is_empty());
}

#[test]
fn manifests_append_across_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = noisy_corpus(dir.path(), 2, 12.0);
    let mut cfg = oracle_config(dir.path());
    let m = dir.path().join("m.jsonl");
    run_round(&corpus, &cfg, &m).unwrap();
    cfg.round_id = 2;
    run_round(&corpus, &cfg, &m).unwrap();
    let rounds: Vec<u32> = read_manifest(&m).unwrap().segments.iter().map(|s| s.round_id).collect();
    assert_eq!(rounds, vec![1, 1, 2, 2]);
}

#[test]
fn empty_corpus_gives_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let report = run_round(&[], &CurationConfig::default(), &m).unwrap();
    assert_eq!((report.files_total, report.segments), (0, 0));
    assert_eq!(std::fs::read_to_string(&m).unwrap(), "");
}

#[test]
fn unreadable_file_becomes_a_failure_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = noisy_corpus(dir.path(), 2, 12.0);
    let junk = dir.path().join("corpus/junk.wav");
    std::fs::write(&junk, b"not a wav").unwrap();
    corpus.insert(1, junk.clone());
    let report = run_round(&corpus, &oracle_config(dir.path()), &dir.path().join("m.jsonl")).unwrap();
    assert_eq!((report.files_processed, report.files_failed, report.segments), (2, 1, 2));
    assert_eq!(report.failures[0].source_uri, junk.display().to_string());
}

#[test]
fn missing_reference_fails_only_that_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = noisy_corpus(dir.path(), 2, 12.0);
    std::fs::remove_file(dir.path().join("clean/001.wav")).unwrap();
    let report = run_round(&corpus, &oracle_config(dir.path()), &dir.path().join("m.jsonl")).unwrap();
    assert_eq!((report.files_failed, report.segments), (1, 1));
}

#[test]
fn eleven_seconds_is_too_short_for_a_segment() {
    let x = synth_clean(11.0, FS, 2);
    let cfg = CurationConfig {
        enhancer: EnhancerSpec::Identity,
        ..Default::default()
    };
    let out = curate_file(&x, &cfg).unwrap();
    assert_eq!(out.accepted.iter().filter(|&&a| a).count(), 11);
    assert!(out.segments.is_empty());
}

#[test]
fn identity_with_always_on_accepts_every_full_band_frame() {
    let x = synth_clean(13.0, FS, 3);
    let cfg = CurationConfig {
        enhancer: EnhancerSpec::Identity,
        vad: VadSpec::AlwaysOn,
        ..Default::default()
    };
    let out = curate_file(&x, &cfg).unwrap();
    assert!(out.rho.iter().all(|&r| r == cfg.rho_max_db));
    for l in 0..out.rho.len() {
        assert_eq!(out.accepted[l], out.cutoff[l] >= cfg.bandwidth_hz);
    }
    assert!(out.accepted.iter().all(|&a| a));
}

#[test]
fn lengths_stay_aligned_through_the_pipeline() {
    for len in [0, 2047, 48_000, 48_001, 130_000] {
        let x = AudioBuffer::new(gaussian(len, 0.1, &mut rng(len as u64)), FS).unwrap();
        let out = curate_file(&x, &CurationConfig::default()).unwrap();
        assert_eq!(out.enhanced.len(), len);
        assert_eq!(out.speech.len(), len);
        assert_eq!(out.rho.len(), len / FS as usize);
    }
}

#[test]
fn raising_thresholds_never_accepts_more() {
    let clean = synth_clean(14.0, FS, 8);
    let mix = inject_noise_at(&clean, NoiseKind::Pink, 15.0, 8).unwrap();
    let mut accepted = Vec::new();
    for b_w in [0.0, 10_000.0, 20_000.0, 23_000.0, 24_000.0] {
        let cfg = CurationConfig {
            bandwidth_hz: b_w,
            ..Default::default()
        };
        let out = curate_file(&mix.noisy, &cfg).unwrap();
        accepted.push(out.accepted.iter().filter(|&&a| a).count());
    }
    assert!(accepted.windows(2).all(|w| w[1] <= w[0]), "{accepted:?}");
}

#[test]
fn export_writes_unprocessed_and_enhanced_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = noisy_corpus(dir.path(), 2, 24.0);
    let m = dir.path().join("m.jsonl");
    run_round(&corpus, &oracle_config(dir.path()), &m).unwrap();
    let segs: Vec<_> = read_manifest(&m).unwrap().segments.into_iter().take(3).collect();

    let oracle = OracleEnhancer::from_dir(dir.path().join("clean"));
    let out = dir.path().join("ab");
    let summary = export_ab_pairs(&segs, &oracle, &out).unwrap();
    assert_eq!(summary.pairs, 3);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert!(names[0].ends_with("_A_unprocessed.wav") && names[1].ends_with("_B_enhanced.wav"));

    let (start, end) = (segs[0].start_sample as usize, segs[0].end_sample as usize);
    let clean = read_wav(dir.path().join("clean").join("000.wav")).unwrap();
    let noisy = read_wav(&corpus[0]).unwrap();
    let a = read_wav(out.join(&names[0])).unwrap();
    let b = read_wav(out.join(&names[1])).unwrap();
    assert_eq!(a.samples(), &noisy.samples()[start..end]);
    assert_eq!(b.samples(), &clean.samples()[start..end]);

    // identity pairs are identical; its id does not match the manifest, so
    // relabel the segments first
    let relabelled: Vec<_> = segs
        .iter()
        .cloned()
        .map(|mut s| {
            s.enhancer_id = "identity".into();
            s
        })
        .collect();
    let out2 = dir.path().join("ab2");
    assert_eq!(export_ab_pairs(&relabelled, &IdentityEnhancer, &out2).unwrap().pairs, 3);
    for e in std::fs::read_dir(&out2).unwrap() {
        let p = e.unwrap().path();
        let s = p.to_string_lossy();
        if s.ends_with("_A_unprocessed.wav") {
            let twin = PathBuf::from(s.replace("_A_unprocessed.wav", "_B_enhanced.wav"));
            assert_eq!(read_wav(&p).unwrap(), read_wav(&twin).unwrap());
        }
    }

    // segments from another enhancer are skipped
    let skipped = export_ab_pairs(&segs, &IdentityEnhancer, &dir.path().join("ab3")).unwrap();
    assert_eq!((skipped.pairs, skipped.enhancer_mismatch), (0, 3));
}

#[test]
fn oracle_frames_score_the_injected_snr() {
    let clean = AudioBuffer::new(synth_clean(5.0, FS, 21).into_samples(), FS).unwrap();
    let mix = inject_noise(&clean, &NoiseSpec { seed: 4, ..Default::default() }).unwrap();
    let cfg = CurationConfig {
        vad: VadSpec::AlwaysOn,
        ..Default::default()
    };
    let curator = Curator::with_enhancer(cfg, Box::new(OracleEnhancer::single(clean.clone()))).unwrap();
    let out = curator.curate(&mix.noisy, Path::new("x.wav")).unwrap();
    for l in 0..5 {
        let span = l * FS as usize..(l + 1) * FS as usize;
        let truth = level_db(&clean.samples()[span.clone()]) - level_db(&mix.noise[span]);
        assert!((out.rho[l] - truth).abs() < 1e-6, "frame {l}: {} vs {truth}", out.rho[l]);
    }
}

/// On a corpus where the 40 dB gate leaves a strictly larger residual than
/// the 10 dB gate wherever noise was injected, the 40 dB gate should move
/// accepted frames toward high scores without accepting fewer frames.
#[test]
fn stronger_gate_raises_high_score_fraction() {
    let corpus: Vec<AudioBuffer> = (0..6u64)
        .map(|i| {
            let clean = synth_clean(24.0, FS, 700 + i);
            let spec = NoiseSpec {
                seed: 800 + i,
                ..Default::default()
            };
            inject_noise(&clean, &spec).unwrap().noisy
        })
        .collect();
    let run = |attenuation_db: f64| {
        let cfg = CurationConfig {
            enhancer: EnhancerSpec::SpectralGate {
                gate_threshold_db: 20.0,
                attenuation_db,
            },
            ..Default::default()
        };
        let curator = Curator::new(cfg).unwrap();
        corpus
            .iter()
            .map(|x| curator.curate(x, Path::new("x.wav")).unwrap())
            .collect::<Vec<_>>()
    };
    let weak = run(10.0);
    let strong = run(40.0);

    let fs = FS as usize;
    for ((x, w), s) in corpus.iter().zip(&weak).zip(&strong) {
        for l in 0..x.len() / fs {
            let span = l * fs..(l + 1) * fs;
            let res = |e: &AudioBuffer| {
                let r: Vec<f64> = x.samples()[span.clone()]
                    .iter()
                    .zip(&e.samples()[span.clone()])
                    .map(|(a, b)| a - b)
                    .collect();
                level_db(&r)
            };
            assert!(res(&s.enhanced) > res(&w.enhanced), "corpus precondition fails at frame {l}");
        }
    }

    let accepted = |runs: &[secp_core::curation::FileCuration]| -> Vec<f64> {
        runs.iter()
            .flat_map(|c| c.rho.iter().zip(c.accepted.iter()).filter(|(_, &a)| a).map(|(&r, _)| r))
            .collect()
    };
    let (w, s) = (accepted(&weak), accepted(&strong));
    let high = |v: &[f64]| v.iter().filter(|&&r| r >= 45.0).count() as f64 / v.len().max(1) as f64;
    assert!(
        s.len() >= w.len() && high(&s) > high(&w),
        "accepted frames {} -> {}, fraction >= 45 dB {:.3} -> {:.3}",
        w.len(),
        s.len(),
        high(&w),
        high(&s)
    );
}

proptest! {
    #[test]
    fn segments_cover_only_accepted_frames_without_overlap(
        a in proptest::collection::vec(any::<bool>(), 0..300),
        k in 1usize..15,
    ) {
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
    fn raising_either_gate_threshold_never_accepts_more(
        rho in proptest::collection::vec(-50.0f64..100.0, 1..100),
        t1 in 0.0f64..60.0,
        dt in 0.0f64..40.0,
    ) {
        let all = vec![true; rho.len()];
        let lo = combine(&snr_gate(&rho, t1), &all).unwrap();
        let hi = combine(&snr_gate(&rho, t1 + dt), &all).unwrap();
        let count = |v: &[bool]| v.iter().filter(|&&x| x).count();
        prop_assert!(count(&hi) <= count(&lo));
    }
}
