//! Report files and the manifest that lists them with SHA-256 hashes.
//!
//! SVG files start with a comment carrying the generation time; that line
//! is left out of the hash so reruns hash identically.

use crate::error::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Prefix of the one line excluded from content hashes.
pub const TIMESTAMP_PREFIX: &str = "<!-- generated-at:";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// An invariant that failed, with what is needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub fixture: String,
    pub h: f64,
    pub k: usize,
    pub p: Vec<f64>,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
    pub failures: Vec<Failure>,
}

/// SHA-256 of `bytes` with any timestamp line removed.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    match std::str::from_utf8(bytes) {
        Ok(text) if text.contains(TIMESTAMP_PREFIX) => {
            for line in text.split_inclusive('\n').filter(|l| !l.starts_with(TIMESTAMP_PREFIX)) {
                h.update(line.as_bytes());
            }
        }
        _ => h.update(bytes),
    }
    hex::encode(h.finalize())
}

/// Writes files under one directory and records them for the manifest.
pub struct ArtifactWriter {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, manifest: Manifest) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.manifest.files.retain(|e| e.path != name);
        self.manifest.files.push(ManifestEntry { path: name.into(), sha256: content_hash(bytes), bytes: bytes.len() });
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| crate::Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn fail(&mut self, check: &str, detail: impl Into<String>, seed: u64) {
        self.manifest.failures.push(Failure { check: check.into(), detail: detail.into(), seed });
    }

    /// Writes `manifest.json`; the manifest does not list itself.
    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(self.manifest)
    }
}
