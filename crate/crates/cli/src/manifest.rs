//! Run manifest: configuration echo, timings, status and hashed outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputFile {
    /// Relative to the manifest's directory when inside it.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Singularity {
    pub step: usize,
    pub cause: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub vertices: usize,
    pub faces: usize,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub steps_completed: usize,
    pub flow_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular: Option<Singularity>,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn hash_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

/// Hashes `path` and records it relative to `base` when possible.
pub fn output_entry(path: &Path, base: &Path) -> Result<OutputFile, CliError> {
    let (sha256, bytes) = hash_file(path)?;
    let rel = path.strip_prefix(base).unwrap_or(path).to_path_buf();
    Ok(OutputFile {
        path: rel,
        sha256,
        bytes,
    })
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}
