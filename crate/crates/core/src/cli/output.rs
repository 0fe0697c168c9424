use super::config::{Experiment, RunConfig};
use crate::error::{Result, RqfError};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub seed: u64,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
    /// SHA-256 over the sorted `name:sha256` lines of `files`.
    pub content_hash: String,
    pub warnings: Vec<String>,
    pub wall_time_seconds: f64,
}

/// Formats a float so that it parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one run directory and records their hashes.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    svg: bool,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path, experiment: Experiment, seed: u64, svg: bool) -> Result<Self> {
        let dir = root.join(format!("{experiment}-{seed}"));
        std::fs::create_dir_all(&dir)?;
        Ok(OutputDir { dir, svg, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry { name: name.to_string(), sha256: hex_digest(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let to_io = |e: csv::Error| RqfError::Io(std::io::Error::other(e));
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.write_record(&row).map_err(to_io)?;
        }
        let bytes = w.into_inner().map_err(|e| RqfError::Io(std::io::Error::other(e.to_string())))?;
        self.write(name, &bytes)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| RqfError::Io(std::io::Error::other(e)))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn svg(&mut self, name: &str, document: impl FnOnce() -> String) -> Result<()> {
        if self.svg {
            self.write(name, document().as_bytes())?;
        }
        Ok(())
    }

    /// Writes `manifest.json` last and returns the manifest.
    pub fn finish(
        self,
        experiment: Experiment,
        config: &RunConfig,
        warnings: Vec<String>,
        wall_time_seconds: f64,
    ) -> Result<RunManifest> {
        let mut lines: Vec<String> = self.files.iter().map(|f| format!("{}:{}\n", f.name, f.sha256)).collect();
        lines.sort();
        let manifest = RunManifest {
            tool: "rqf",
            version: env!("CARGO_PKG_VERSION"),
            experiment,
            seed: config.seeds.master,
            config: config.clone(),
            content_hash: hex_digest(lines.concat().as_bytes()),
            files: self.files,
            warnings,
            wall_time_seconds,
        };
        let mut bytes =
            serde_json::to_vec_pretty(&manifest).map_err(|e| RqfError::Io(std::io::Error::other(e)))?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(manifest)
    }
}

/// `x_0, …, x_{n−1}` column names.
pub fn coord_columns(n: usize) -> impl Iterator<Item = String> {
    (0..n).map(|i| format!("x_{i}"))
}

pub fn header(fixed: &[&str], n_coords: usize) -> Vec<String> {
    fixed.iter().map(|s| s.to_string()).chain(coord_columns(n_coords)).collect()
}
