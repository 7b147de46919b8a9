//! Writing run artifacts: atomic file writes and the manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::Artifacts;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::tolerances;

#[derive(Serialize)]
struct FileEntry<'a> {
    path: &'a str,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: crate::config::Command,
    seed: u64,
    passed: bool,
    config: &'a ExperimentConfig,
    /// The stability bound actually used, including derived `"auto"` constants.
    stability: &'a Value,
    tolerances: std::collections::BTreeMap<&'static str, f64>,
    files: Vec<FileEntry<'a>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

/// Writes `summary.json`, every artifact, then `manifest.json` last.
pub fn write_run(dir: &Path, cfg: &ExperimentConfig, mut artifacts: Artifacts) -> Result<Value, CliError> {
    artifacts.files.insert(0, ("summary.json".to_string(), pretty(&artifacts.summary)));
    for (rel, bytes) in &artifacts.files {
        write_atomic(&dir.join(rel), bytes)?;
    }
    let files = artifacts
        .files
        .iter()
        .map(|(rel, bytes)| FileEntry { path: rel, sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() })
        .collect();
    let manifest = Manifest {
        command: cfg.command,
        seed: cfg.numeric.seed,
        passed: artifacts.passed,
        config: cfg,
        stability: artifacts.summary.get("stability").unwrap_or(&Value::Null),
        tolerances: tolerances::table(),
        files,
    };
    write_atomic(&dir.join("manifest.json"), &pretty(&manifest))?;
    Ok(artifacts.summary)
}
