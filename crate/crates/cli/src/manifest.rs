//! Run manifests: config snapshot, content hash and per-file checksums.
//!
//! The manifest is written as soon as an output directory is opened, marked
//! incomplete, and rewritten after every file. Only a run that finishes marks
//! it complete, so an interrupted directory is always recognisable.

use std::fs;
use std::path::{Path, PathBuf};

use morpho_core::rng::GENERATOR_NAME;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Incomplete,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: RunStatus,
    pub rng: String,
    /// SHA-256 of `config`.
    pub config_sha256: String,
    /// Canonical TOML form of the effective configuration.
    pub config: String,
    /// Free-form facts about how outputs were derived.
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that records every file it writes.
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str, config_toml: &str, notes: Vec<String>) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        let dir = Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                status: RunStatus::Incomplete,
                rng: GENERATOR_NAME.to_string(),
                config_sha256: sha256_hex(config_toml.as_bytes()),
                config: config_toml.to_string(),
                notes,
                files: Vec::new(),
            },
        };
        dir.flush()?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` to `rel` (forward-slash separated) and records its checksum.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        self.write_quiet(rel, bytes)?;
        self.flush()
    }

    /// Like [`write`](Self::write) without rewriting the manifest; call
    /// [`flush`](Self::flush) afterwards.
    pub fn write_quiet(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let entry = FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        };
        match self.manifest.files.iter_mut().find(|f| f.path == rel) {
            Some(f) => *f = entry,
            None => self.manifest.files.push(entry),
        }
        Ok(())
    }

    pub fn flush(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.root.join(MANIFEST_NAME), text + "\n")
    }

    pub fn finish(mut self) -> std::io::Result<RunManifest> {
        self.manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.status = RunStatus::Complete;
        self.flush()?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(root: &Path) -> anyhow::Result<RunManifest> {
    let text = fs::read_to_string(root.join(MANIFEST_NAME))?;
    Ok(serde_json::from_str(&text)?)
}

/// Files whose on-disk checksum differs from the manifest (or are missing).
pub fn verify(root: &Path, manifest: &RunManifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| match fs::read(root.join(&f.path)) {
            Ok(bytes) => sha256_hex(&bytes) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect()
}
