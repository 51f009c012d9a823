use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs. Holds no
/// timestamps, so identical runs write identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub schema_version: String,
    pub tool_version: String,
}

fn record(path: &Path) -> Result<FileRecord, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileRecord { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

impl RunManifest {
    pub fn new(subcommand: &str, params: Value) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            params,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            schema_version: tribunal_core::features::SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(record(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        self.outputs.push(record(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

/// `dir/manifest.json` for directory outputs, `<file>.manifest.json` otherwise.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}
