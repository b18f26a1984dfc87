//! Run manifests: enough provenance to reproduce any artifact-producing run.
//!
//! Manifests are deliberately timestamp-free so identical runs produce
//! byte-identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::jsonl::FileError;

/// Provenance of one run: the subcommand, its effective configuration,
/// SHA-256 digests of every input file, and the artifacts written.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "slicecal",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Records an input file under its path with its content digest.
    pub fn add_input(&mut self, path: &Path) -> Result<(), FileError> {
        let digest = sha256_file(path)?;
        self.inputs
            .insert(path.display().to_string(), format!("sha256:{digest}"));
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes the manifest as pretty JSON.
    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes infallibly");
        std::fs::write(path, json + "\n").map_err(|source| FileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String, FileError> {
    let bytes = std::fs::read(path).map_err(|source| FileError::Io {
        path: PathBuf::from(path),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Hex SHA-256 of an in-memory collection of ids (used to pin holdout sets).
pub fn sha256_ids<'a, I: IntoIterator<Item = &'a str>>(ids: I) -> String {
    let mut hasher = Sha256::new();
    for id in ids {
        hasher.update(id.as_bytes());
        hasher.update(b"\n");
    }
    format!("{:x}", hasher.finalize())
}
