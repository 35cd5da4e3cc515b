use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::Exit;

/// WAV files in a directory (non-recursive) or matching a glob, sorted.
pub fn resolve(spec: &str) -> Result<Vec<PathBuf>> {
    let dir = Path::new(spec);
    let mut files: Vec<PathBuf> = if dir.is_dir() {
        std::fs::read_dir(dir)
            .with_context(|| format!("reading {spec}"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_wav(p))
            .collect()
    } else {
        glob::glob(spec)
            .map_err(|e| Exit::Config(format!("corpus pattern `{spec}`: {e}")))?
            .filter_map(|p| p.ok())
            .filter(|p| p.is_file())
            .collect()
    };
    files.sort();
    if files.is_empty() {
        return Err(Exit::EmptyCorpus(format!("`{spec}` matched no files")).into());
    }
    Ok(files)
}

pub fn is_wav(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}
