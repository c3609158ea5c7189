//! Persisted record of a run: configuration snapshot, resolved constants,
//! output inventory with content hashes, timings. Manifests are written once
//! per run directory and never mutated.

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_MAGIC: &str = "#benard-manifest v1";
pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Default)]
pub struct Manifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub constants: Vec<(String, f64)>,
    pub files: Vec<(String, String, u64)>,
    pub timings: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Manifest {
            command: command.to_string(),
            config,
            ..Default::default()
        }
    }

    pub fn constant(&mut self, key: &str, value: f64) {
        self.constants.push((key.to_string(), value));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn timing(&mut self, key: &str, seconds: f64) {
        self.timings.push((key.to_string(), seconds));
    }

    /// Register an already-written run output.
    pub fn add_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let path = dir.join(name);
        let bytes = std::fs::read(&path)
            .with_context(|| format!("hashing output {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        self.files
            .push((name.to_string(), hex::encode(digest), bytes.len() as u64));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut out = String::new();
        let _ = writeln!(out, "{MANIFEST_MAGIC}");
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "tool = benard {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "\n[config]");
        for (k, v) in &self.config {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "\n[constants]");
        for (k, v) in &self.constants {
            let _ = writeln!(out, "{k} = {v:.12e}");
        }
        let _ = writeln!(out, "\n[files]");
        for (name, hash, size) in &self.files {
            let _ = writeln!(out, "{name} sha256:{hash} {size}");
        }
        let _ = writeln!(out, "\n[timings]");
        for (k, v) in &self.timings {
            let _ = writeln!(out, "{k}_s = {v:.3}");
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(out, "- {n}");
            }
        }
        let path = dir.join(MANIFEST_NAME);
        if path.exists() {
            bail!("manifest already exists at {}", path.display());
        }
        std::fs::write(&path, out)?;
        Ok(path)
    }
}

/// Parsed, verified view of an existing manifest.
#[derive(Debug)]
pub struct ManifestSummary {
    pub command: String,
    pub constants: Vec<(String, f64)>,
    pub files: Vec<(String, String, u64)>,
    pub config_lines: Vec<String>,
}

/// Read a manifest and verify that every referenced file exists with the
/// recorded hash.
pub fn verify(dir: &Path) -> Result<ManifestSummary> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MANIFEST_MAGIC) {
        bail!("{} is not a benard manifest", path.display());
    }
    let mut summary = ManifestSummary {
        command: String::new(),
        constants: Vec::new(),
        files: Vec::new(),
        config_lines: Vec::new(),
    };
    let mut section = String::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].to_string();
            continue;
        }
        match section.as_str() {
            "" => {
                if let Some(v) = line.strip_prefix("command =") {
                    summary.command = v.trim().to_string();
                }
            }
            "config" => summary.config_lines.push(line.to_string()),
            "constants" => {
                if let Some((k, v)) = line.split_once('=') {
                    if let Ok(x) = v.trim().parse::<f64>() {
                        summary.constants.push((k.trim().to_string(), x));
                    }
                }
            }
            "files" => {
                let mut parts = line.split_whitespace();
                let name = parts.next().ok_or_else(|| anyhow!("bad files line"))?;
                let hash = parts
                    .next()
                    .and_then(|h| h.strip_prefix("sha256:"))
                    .ok_or_else(|| anyhow!("bad hash on files line '{line}'"))?;
                let size: u64 = parts
                    .next()
                    .ok_or_else(|| anyhow!("missing size on '{line}'"))?
                    .parse()?;
                summary
                    .files
                    .push((name.to_string(), hash.to_string(), size));
            }
            _ => {}
        }
    }
    for (name, hash, size) in &summary.files {
        let fpath = dir.join(name);
        let bytes = std::fs::read(&fpath)
            .with_context(|| format!("output {} is missing", fpath.display()))?;
        if bytes.len() as u64 != *size {
            bail!("{name}: size {} != recorded {size}", bytes.len());
        }
        let digest = hex::encode(Sha256::digest(&bytes));
        if digest != *hash {
            bail!("{name}: content hash mismatch");
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_verification() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("table.csv"), "a,b\n1,2\n").unwrap();
        let mut m = Manifest::new("critical", BTreeMap::new());
        m.constant("R_c", 657.5114);
        m.add_file(dir.path(), "table.csv").unwrap();
        m.timing("total", 0.5);
        m.write(dir.path()).unwrap();

        let summary = verify(dir.path()).unwrap();
        assert_eq!(summary.command, "critical");
        assert_eq!(summary.files.len(), 1);

        // tampering is detected
        std::fs::write(dir.path().join("table.csv"), "a,b\n1,3\n").unwrap();
        assert!(verify(dir.path()).is_err());
    }

    #[test]
    fn manifests_are_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new("critical", BTreeMap::new());
        m.write(dir.path()).unwrap();
        let again = Manifest::new("critical", BTreeMap::new());
        assert!(again.write(dir.path()).is_err());
    }
}
