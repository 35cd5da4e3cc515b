use anyhow::Result;
use secp_core::curation::{export_ab_pairs, filter_manifest, RhoBound};

use super::load_config;
use crate::{ExportArgs, Exit};

pub fn run(args: ExportArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let enhancer = cfg
        .enhancer
        .build(cfg.stft)
        .map_err(|e| Exit::Config(format!("enhancer: {e}")))?;
    let bounds: Vec<RhoBound> = args
        .min_rho
        .map(RhoBound::Min)
        .into_iter()
        .chain(args.max_rho.map(RhoBound::Max))
        .collect();
    let read = filter_manifest(&args.manifest, &bounds)?;
    let summary = export_ab_pairs(&read.segments, enhancer.as_ref(), &args.out)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
