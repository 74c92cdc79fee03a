//! Run manifests: what a command read, what it wrote and with which
//! configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use g2sqg::Config;

#[derive(Debug, Serialize)]
pub struct InputEntry {
    pub path: String,
    /// SHA-256 over `blob <len>\0<content>`.
    pub hash: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config: String,
    pub inputs: Vec<InputEntry>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    #[serde(skip)]
    out_dir: PathBuf,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Git-style content hash, with SHA-256 in place of SHA-1.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("sha256:{:x}", h.finalize())
}

impl RunManifest {
    pub fn new(command: &str, cfg: &Config, out_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            seed: cfg.seed,
            config: cfg.to_text(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: now(),
            finished_unix: 0,
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(InputEntry {
            path: path.display().to_string(),
            hash: content_hash(&bytes),
        });
        Ok(())
    }

    /// Path of an artifact inside the output directory, recorded as written.
    pub fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.outputs.push(path.display().to_string());
        path
    }

    /// Writes the configuration snapshot and `manifest-<command>.json`.
    pub fn finish(mut self) -> Result<PathBuf> {
        let cfg_path = self.output(&format!("config-{}.txt", self.command));
        fs::write(&cfg_path, &self.config)?;
        self.finished_unix = now();
        let path = self.out_dir.join(format!("manifest-{}.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&self)?)?;
        Ok(path)
    }
}
