//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::plot::{emit_plot, Plot, PlotKind};

pub const MANIFEST: &str = "manifest.json";

/// Tracks the files written by one run.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stale = dir.join(MANIFEST);
        if stale.exists() {
            fs::remove_file(&stale).with_context(|| format!("removing stale {}", stale.display()))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn track(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.track(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.track(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.track(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    pub fn plot(&mut self, name: &str, plot: &Plot, kind: PlotKind) -> Result<()> {
        let path = self.track(name);
        emit_plot(plot, kind, &path)
    }

    /// Writes the manifest through a temporary file and a rename, so its
    /// presence marks a completed run.
    pub fn finish(self, manifest: ManifestInput<'_>) -> Result<RunManifest> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
            files.push(FileDigest {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: hex(&Sha256::digest(&bytes)),
            });
        }
        let m = RunManifest {
            experiment: manifest.config.experiment.name().to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            started: manifest.started,
            finished: chrono::Utc::now().to_rfc3339(),
            config: manifest.config.clone(),
            config_text: manifest.config_text.to_string(),
            workers: manifest.workers,
            files,
            verdict: manifest.verdict,
        };
        let tmp = self.dir.join(format!(".{MANIFEST}.tmp"));
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, self.dir.join(MANIFEST))?;
        Ok(m)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub struct ManifestInput<'a> {
    pub config: &'a RunConfig,
    pub config_text: &'a str,
    pub started: String,
    pub workers: usize,
    pub verdict: VerdictSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub artifact_version: String,
    pub started: String,
    pub finished: String,
    pub config: RunConfig,
    pub config_text: String,
    pub workers: usize,
    pub files: Vec<FileDigest>,
    pub verdict: VerdictSummary,
}

/// Recomputes every digest listed in a manifest file; returns mismatching paths.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for f in v["files"].as_array().into_iter().flatten() {
        let name = f["path"].as_str().unwrap_or_default();
        let ok = fs::read(dir.join(name))
            .map(|b| hex(&Sha256::digest(&b)) == f["sha256"].as_str().unwrap_or_default())
            .unwrap_or(false);
        if !ok {
            bad.push(name.to_string());
        }
    }
    Ok(bad)
}
