mod common;

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use secp_core::curation::{CurationConfig, Curator};
use secp_core::enhance::{enhance_with, EnhanceError, ExternalEnhancer};
use secp_core::exchange::ExchangeError;
use secp_core::vad::{detect, VadError};
use secp_core::{write_wav, AudioBuffer, EnhancerSpec, SampleFormat, VadSpec};

use common::{as_f32, gaussian, rng};

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn external(dir: &Path, command: String) -> ExternalEnhancer {
    ExternalEnhancer {
        command,
        exchange_dir: dir.join("exchange"),
        timeout: Duration::from_secs(30),
    }
}

#[test]
fn copying_command_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let x = AudioBuffer::new(as_f32(&gaussian(9_999, 0.2, &mut rng(1))), 16_000).unwrap();
    let e = external(dir.path(), "cp {input} {output}".into());
    let y = enhance_with(&e, &x, Some(Path::new("/corpus/a.wav"))).unwrap();
    assert_eq!(x, y);
    // exchange files are removed afterwards
    let left: Vec<_> = std::fs::read_dir(dir.path().join("exchange")).unwrap().collect();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn failing_command_reports_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let s = script(dir.path(), "fail.sh", "echo broken >&2; exit 7");
    let x = AudioBuffer::new(vec![0.1; 100], 16_000).unwrap();
    let e = external(dir.path(), format!("{} {{input}} {{output}}", s.display()));
    match enhance_with(&e, &x, None) {
        Err(EnhanceError::External(ExchangeError::Failed { code, stderr, .. })) => {
            assert_eq!(code, Some(7));
            assert_eq!(stderr, "broken");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn wrong_length_output_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.wav");
    write_wav(&short, &AudioBuffer::new(vec![0.0; 50], 16_000).unwrap(), SampleFormat::Float32).unwrap();
    let s = script(dir.path(), "short.sh", &format!("cp {} \"$2\"", short.display()));
    let x = AudioBuffer::new(vec![0.1; 100], 16_000).unwrap();
    let e = external(dir.path(), format!("{} {{input}} {{output}}", s.display()));
    match enhance_with(&e, &x, None) {
        Err(EnhanceError::ContractViolation { expected, actual, .. }) => {
            assert_eq!((expected, actual), (100, 50));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_placeholder_is_rejected_before_running() {
    let spec = EnhancerSpec::External {
        command: "cp {input} /tmp/x.wav".into(),
        exchange_dir: "/tmp".into(),
        timeout_secs: 5,
    };
    assert!(spec.validate().is_err());
}

#[test]
fn slow_command_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let s = script(dir.path(), "slow.sh", "sleep 5");
    let x = AudioBuffer::new(vec![0.1; 100], 16_000).unwrap();
    let e = ExternalEnhancer {
        command: format!("{} {{input}} {{output}}", s.display()),
        exchange_dir: dir.path().into(),
        timeout: Duration::from_millis(300),
    };
    assert!(matches!(
        enhance_with(&e, &x, None),
        Err(EnhanceError::External(ExchangeError::Timeout { .. }))
    ));
}

#[test]
fn external_vad_thresholds_output_at_one_half() {
    let dir = tempfile::tempdir().unwrap();
    // the "model" is a copy: samples >= 0.5 become speech
    let spec = VadSpec::External {
        command: "cp {input} {output}".into(),
        exchange_dir: dir.path().join("vad"),
        timeout_secs: 30,
    };
    let x = AudioBuffer::new(vec![0.0, 0.49, 0.5, 0.9, -0.7], 16_000).unwrap();
    let mask = detect(&x, &spec).unwrap();
    assert_eq!(mask.decisions(), &[false, false, true, true, false]);
}

#[test]
fn external_vad_with_wrong_length_fails() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.wav");
    write_wav(&short, &AudioBuffer::new(vec![1.0; 3], 16_000).unwrap(), SampleFormat::Float32).unwrap();
    let s = script(dir.path(), "vad.sh", &format!("cp {} \"$2\"", short.display()));
    let spec = VadSpec::External {
        command: format!("{} {{input}} {{output}}", s.display()),
        exchange_dir: dir.path().into(),
        timeout_secs: 30,
    };
    let x = AudioBuffer::new(vec![0.1; 10], 16_000).unwrap();
    assert!(matches!(detect(&x, &spec), Err(VadError::LengthMismatch { expected: 10, actual: 3 })));
}

#[test]
fn curation_with_external_backends_matches_in_process_identity() {
    let dir = tempfile::tempdir().unwrap();
    let fs = 16_000;
    let x = AudioBuffer::new(as_f32(&secp_core::evalgen::synth_clean(13.0, fs, 4).into_samples()), fs).unwrap();
    let mut cfg = CurationConfig {
        sample_rate: fs,
        bandwidth_hz: 0.0,
        enhancer: EnhancerSpec::External {
            command: "cp {input} {output}".into(),
            exchange_dir: dir.path().join("enh"),
            timeout_secs: 30,
        },
        vad: VadSpec::AlwaysOn,
        ..Default::default()
    };
    let ext = Curator::new(cfg.clone()).unwrap().curate(&x, Path::new("a.wav")).unwrap();
    cfg.enhancer = EnhancerSpec::Identity;
    let ident = Curator::new(cfg).unwrap().curate(&x, Path::new("a.wav")).unwrap();
    assert_eq!(ext.rho, ident.rho);
    assert_eq!(ext.segments.len(), 1);
}
