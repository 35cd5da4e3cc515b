use anyhow::{Context, Result};
use secp_core::curation::{report_path, run_round_with, Curator};

use super::load_config;
use crate::{corpus, CurateArgs, Exit};

pub fn run(args: CurateArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(round) = args.round {
        cfg.round_id = round;
    }
    let curator = Curator::new(cfg).map_err(|e| Exit::Config(e.to_string()))?;
    let files = corpus::resolve(&args.corpus)?;
    if let Some(dir) = args.manifest.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    log::info!(
        "round {}: curating {} file(s) with {}",
        curator.config().round_id,
        files.len(),
        curator.enhancer_id()
    );
    let report = run_round_with(&curator, &files, &args.manifest)?;
    log::info!(
        "{} segment(s), {:.1} s curated, {} failure(s); report at {}",
        report.segments,
        report.curated_seconds,
        report.files_failed,
        report_path(&args.manifest, report.round_id).display()
    );
    Ok(())
}
