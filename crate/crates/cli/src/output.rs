//! Artifact writing. Every file opens with the command name, the SHA-256 of
//! the effective configuration and the configuration itself, and is written
//! through a temporary file so readers never see a partial artifact.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Canonical JSON of a configuration and its digest.
#[derive(Clone, Debug)]
pub struct Stamp {
    pub command: &'static str,
    pub config: Value,
    pub hash: String,
}

impl Stamp {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        let canonical = json!({ "command": command, "config": config }).to_string();
        let hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
        Ok(Self { command, config, hash })
    }

    /// First line of every CSV artifact.
    pub fn csv_header(&self) -> String {
        format!(
            "# iblab {} config_sha256={} config={}\n",
            self.command, self.hash, self.config
        )
    }

    /// JSON envelope carrying the same header fields as the CSV line.
    pub fn json_document<R: Serialize>(&self, result: &R) -> Result<String> {
        let doc = json!({
            "command": self.command,
            "config_sha256": self.hash,
            "config": self.config,
            "result": result,
        });
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))
    }
}

/// Output directory of one run.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Output {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `contents` to `name` atomically: a temporary file in the same
    /// directory is filled, flushed and renamed over the target.
    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let target = self.path(name);
        let err = |source| CliError::Output {
            path: target.display().to_string(),
            source,
        };
        let mut tmp = NamedTempFile::new_in(&self.root).map_err(err)?;
        tmp.write_all(contents.as_bytes()).map_err(err)?;
        tmp.as_file().sync_all().map_err(err)?;
        tmp.persist(&target).map_err(|e| err(e.error))?;
        Ok(target)
    }

    pub fn write_csv(&self, name: &str, stamp: &Stamp, body: &str) -> Result<PathBuf> {
        self.write(name, &format!("{}{}", stamp.csv_header(), body))
    }

    pub fn write_json<R: Serialize>(&self, name: &str, stamp: &Stamp, result: &R) -> Result<PathBuf> {
        self.write(name, &stamp.json_document(result)?)
    }
}
