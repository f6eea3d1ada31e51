//! Output directory manifest: every artifact with its digest and the hash
//! of the configuration that produced it.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub command: String,
    pub sha256: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Collects files written by one command, then records them.
pub struct Outputs {
    dir: PathBuf,
    command: String,
    config_hash: String,
    seed: u64,
    written: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path, command: &str, config_hash: String, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_hash,
            seed,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        self.written.push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(path)
    }

    /// Merge this command's artifacts into the directory manifest.
    pub fn finish(self) -> Result<(), CliError> {
        let path = self.dir.join(MANIFEST_NAME);
        let mut manifest: Manifest = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_default(),
            Err(_) => Manifest::default(),
        };
        for (name, sha256) in self.written {
            manifest.artifacts.insert(
                name,
                Artifact {
                    command: self.command.clone(),
                    sha256,
                    config_hash: self.config_hash.clone(),
                    seed: self.seed,
                },
            );
        }
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        std::fs::write(&path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
    }
}
