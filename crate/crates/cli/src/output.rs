//! Deterministic serialization: CSV tables with 17 significant digits and a
//! JSON manifest listing every emitted file with its checksum. Numeric
//! tables carry no timestamps, so identical configs rerun byte-identically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct ConservationSummary {
    pub max_charge_drift: f64,
    pub max_energy_drift: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub artifact_version: &'static str,
    pub command: String,
    pub status: String,
    /// Fully resolved configuration, defaults and flag overrides applied.
    pub config: C,
    pub started_unix: f64,
    pub finished_unix: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationSummary>,
    pub files: Vec<FileEntry>,
}

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// A run-owned output directory that tracks every file written into it.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write_file(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex_digest(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest (which lists all previously written files) and
    /// consumes the directory handle.
    pub fn finish<C: Serialize>(
        self,
        command: &str,
        status: &str,
        config: C,
        started_unix: f64,
        conservation: Option<ConservationSummary>,
    ) -> std::io::Result<()> {
        let manifest = RunManifest {
            artifact_version: ARTIFACT_VERSION,
            command: command.to_string(),
            status: status.to_string(),
            config,
            started_unix,
            finished_unix: now_unix(),
            conservation,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), text)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Builds a CSV document: optional `#`-prefixed header comments, a header
/// row, then data rows.
pub struct CsvBuilder {
    text: String,
}

impl CsvBuilder {
    pub fn new(comments: &[String], header: &[&str]) -> Self {
        let mut text = String::new();
        for line in comments {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
