//! Artifact output: files written through [`Artifacts`] are hashed and
//! listed in `manifest.json` together with the configuration hash, the crate
//! versions and the tolerances in force.

use crate::config::{RunConfig, Tolerances};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Locale-free float formatting for CSV: shortest round-trip scientific form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// CSV text from a header and rows, `'\n'` line endings.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub seed: u64,
    /// SHA-256 of `config.toml`, the canonical effective configuration.
    pub config_sha256: String,
    pub config_file: &'static str,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub tolerances: Tolerances,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn versions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("vsheet-cli", env!("CARGO_PKG_VERSION")),
        ("vsheet-core", vsheet_core::VERSION),
        ("vsheet-linear", vsheet_linear::VERSION),
        ("vsheet-nonlinear", vsheet_nonlinear::VERSION),
    ])
}

/// Writer for one run directory.
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.push(ArtifactEntry { file: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write `config.toml` and `manifest.json`; returns the manifest.
    pub fn finish(self, config: &RunConfig) -> std::io::Result<Manifest> {
        let text = config.canonical();
        std::fs::write(self.dir.join("config.toml"), &text)?;
        let manifest = Manifest {
            experiment: config.experiment.kind.name(),
            seed: config.experiment.seed,
            config_sha256: sha256_hex(text.as_bytes()),
            config_file: "config.toml",
            versions: versions(),
            tolerances: config.tolerances,
            artifacts: self.entries,
        };
        let mut json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        json.push('\n');
        std::fs::write(self.dir.join("manifest.json"), json)?;
        Ok(manifest)
    }
}
