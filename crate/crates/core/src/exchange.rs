//! File-exchange protocol for external model processes.
//!
//! The command template is split on whitespace; `{input}` and `{output}` (and
//! any other named placeholder) are substituted per token. The process is run
//! directly, without a shell. Exit code 0 means success.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::AudioBuffer;

pub const DEFAULT_TIMEOUT_SECS: u64 = 600;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("command template is empty")]
    EmptyCommand,
    #[error("command template is missing the {{{0}}} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("failed to launch `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{program}` exited with code {code:?}: {stderr}")]
    Failed {
        program: String,
        code: Option<i32>,
        stderr: String,
    },
    #[error("`{program}` timed out after {seconds} s")]
    Timeout { program: String, seconds: u64 },
    #[error("exchange i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Checks that every named placeholder appears in the template.
pub fn check_template(template: &str, required: &[&'static str]) -> Result<(), ExchangeError> {
    if template.split_whitespace().next().is_none() {
        return Err(ExchangeError::EmptyCommand);
    }
    for name in required {
        if !template.contains(&format!("{{{name}}}")) {
            return Err(ExchangeError::MissingPlaceholder(name));
        }
    }
    Ok(())
}

/// Output of a finished external command.
#[derive(Debug)]
pub struct CommandOutput {
    pub stdout: String,
    pub stderr: String,
}

pub fn run_template(
    template: &str,
    vars: &HashMap<&str, String>,
    timeout: Duration,
) -> Result<CommandOutput, ExchangeError> {
    let mut tokens = template.split_whitespace().map(|tok| {
        vars.iter()
            .fold(tok.to_string(), |t, (k, v)| t.replace(&format!("{{{k}}}"), v))
    });
    let program = tokens.next().ok_or(ExchangeError::EmptyCommand)?;
    let mut child = Command::new(&program)
        .args(tokens)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExchangeError::Spawn {
            program: program.clone(),
            source,
        })?;

    let drain = |pipe: Option<Box<dyn Read + Send>>| {
        std::thread::spawn(move || {
            let mut s = String::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_string(&mut s);
            }
            s
        })
    };
    let out_thread = drain(child.stdout.take().map(|p| Box::new(p) as Box<dyn Read + Send>));
    let err_thread = drain(child.stderr.take().map(|p| Box::new(p) as Box<dyn Read + Send>));

    let started = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if started.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExchangeError::Timeout {
                    program,
                    seconds: timeout.as_secs(),
                });
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(source) => {
                return Err(ExchangeError::Spawn { program, source });
            }
        }
    };
    let stdout = out_thread.join().unwrap_or_default();
    let stderr = err_thread.join().unwrap_or_default();
    if !status.success() {
        return Err(ExchangeError::Failed {
            program,
            code: status.code(),
            stderr: stderr.trim().to_string(),
        });
    }
    Ok(CommandOutput { stdout, stderr })
}

static EXCHANGE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Unique exchange file stem: content hash, sample offset, process id and a
/// per-process counter.
pub fn exchange_stem(buf: &AudioBuffer, source: Option<&Path>, offset: usize) -> String {
    let mut h = Sha256::new();
    if let Some(p) = source {
        h.update(p.to_string_lossy().as_bytes());
    }
    h.update(buf.sample_rate().to_le_bytes());
    for s in buf.samples() {
        h.update(s.to_le_bytes());
    }
    let digest = hex::encode(&h.finalize()[..8]);
    let n = EXCHANGE_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("{digest}_{offset}_{}_{n}", std::process::id())
}

/// Removes the listed exchange files on drop.
pub(crate) struct Cleanup(pub Vec<PathBuf>);

impl Drop for Cleanup {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = std::fs::remove_file(p);
        }
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), ExchangeError> {
    std::fs::create_dir_all(dir).map_err(|source| ExchangeError::Io {
        path: dir.to_path_buf(),
        source,
    })
}
