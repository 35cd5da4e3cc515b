use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use secp_core::enhance::enhance_with;
use secp_core::evalgen::{delta_quality, resolve_metric, EvalTriple};
use secp_core::read_wav;

use super::{load_config, write_json};
use crate::{corpus::is_wav, EvalArgs, Exit};

#[derive(Debug, Serialize)]
struct EvalReport {
    enhancer_id: String,
    metric_id: String,
    config_hash: String,
    evaluated: usize,
    skipped: usize,
    mean_delta: Option<f64>,
    files: Vec<FileDelta>,
}

#[derive(Debug, Serialize)]
struct FileDelta {
    file: String,
    delta: f64,
    enhanced_score: f64,
    noisy_score: f64,
}

fn wav_names(dir: &Path) -> Result<BTreeSet<String>> {
    Ok(std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_wav(p))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect())
}

pub fn run(args: EvalArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let enhancer = cfg
        .enhancer
        .build(cfg.stft)
        .map_err(|e| Exit::Config(format!("enhancer: {e}")))?;
    let metric = resolve_metric(&args.metric, std::env::temp_dir().join("secp-metric"))
        .map_err(|e| Exit::Config(format!("metric: {e}")))?;

    let clean_dir = args.corpus.join("clean");
    let noisy_dir = args.corpus.join("noisy");
    let clean = wav_names(&clean_dir)?;
    let noisy = wav_names(&noisy_dir)?;
    let paired: Vec<&String> = clean.intersection(&noisy).collect();
    let unpaired = clean.symmetric_difference(&noisy).count();
    if paired.is_empty() {
        return Err(Exit::EmptyCorpus(format!("no clean/noisy pairs under {}", args.corpus.display())).into());
    }

    let results: Vec<Option<FileDelta>> = paired
        .par_iter()
        .map(|name| {
            let score = || -> Result<FileDelta> {
                let noisy_path = noisy_dir.join(name);
                let c = read_wav(clean_dir.join(name))?;
                let n = read_wav(&noisy_path)?;
                let e = enhance_with(enhancer.as_ref(), &n, Some(&noisy_path))?;
                let d = delta_quality(&EvalTriple::new(c, n, e)?, metric.as_ref())?;
                Ok(FileDelta {
                    file: name.to_string(),
                    delta: d.delta,
                    enhanced_score: d.enhanced_score,
                    noisy_score: d.noisy_score,
                })
            };
            score().map_err(|e| log::warn!("{name}: skipped: {e:#}")).ok()
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    let files: Vec<FileDelta> = results.into_iter().flatten().collect();
    let mean_delta = (!files.is_empty()).then(|| files.iter().map(|f| f.delta).sum::<f64>() / files.len() as f64);

    let report = EvalReport {
        enhancer_id: enhancer.id(),
        metric_id: metric.id(),
        config_hash: cfg.config_hash(),
        evaluated: files.len(),
        skipped: unpaired + failed,
        mean_delta,
        files,
    };
    match &args.out {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}
