pub mod curate;
pub mod eval;
pub mod export;
pub mod report;
pub mod synth;

use std::path::Path;

use anyhow::Result;
use secp_core::CurationConfig;

use crate::Exit;

pub fn load_config(path: Option<&Path>) -> Result<CurationConfig> {
    match path {
        Some(p) => CurationConfig::load(p).map_err(|e| Exit::Config(format!("{}: {e}", p.display())).into()),
        None => {
            log::info!("no --config given, using defaults");
            Ok(CurationConfig::default())
        }
    }
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
