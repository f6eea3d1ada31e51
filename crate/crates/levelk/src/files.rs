//! Policy and empirical-policy files.

use levelk_core::dqn::{Activation, DenseLayer, QNetwork};
use levelk_core::env::Encoding;
use levelk_core::ingest::EmpiricalPolicy;
use levelk_core::levelk::{Policy, PolicyRef, Registry};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const POLICY_VERSION: u32 = 1;
pub const EMPIRICAL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FileError {
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("file version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("only network policies are stored in files")]
    NotANetwork,
}

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    version: u32,
    level: u32,
    encoding: Encoding,
    temperature: f64,
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    /// Row-major `outputs x inputs` per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct Versioned {
    version: u32,
}

fn check_version(bytes: &[u8], expected: u32) -> Result<(), FileError> {
    let v: Versioned = serde_json::from_slice(bytes).map_err(|e| FileError::Malformed(e.to_string()))?;
    if v.version != expected {
        return Err(FileError::VersionMismatch {
            found: v.version,
            expected,
        });
    }
    Ok(())
}

pub fn save_policy(policy: &PolicyRef) -> Result<String, FileError> {
    let Policy::Network {
        net,
        encoding,
        temperature,
    } = &policy.policy
    else {
        return Err(FileError::NotANetwork);
    };
    let doc = PolicyDocument {
        version: POLICY_VERSION,
        level: policy.level,
        encoding: *encoding,
        temperature: *temperature,
        layer_sizes: net.layer_sizes(),
        activations: net.layers().iter().map(|l| l.activation).collect(),
        weights: net.layers().iter().map(|l| l.weights.clone()).collect(),
        biases: net.layers().iter().map(|l| l.biases.clone()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| FileError::Malformed(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn load_policy(bytes: &[u8]) -> Result<PolicyRef, FileError> {
    check_version(bytes, POLICY_VERSION)?;
    let doc: PolicyDocument = serde_json::from_slice(bytes).map_err(|e| FileError::Malformed(e.to_string()))?;
    let n = doc.layer_sizes.len().saturating_sub(1);
    if n == 0 || doc.activations.len() != n || doc.weights.len() != n || doc.biases.len() != n {
        return Err(FileError::Malformed("layer lists disagree with layer_sizes".into()));
    }
    let layers = (0..n)
        .map(|i| DenseLayer {
            inputs: doc.layer_sizes[i],
            outputs: doc.layer_sizes[i + 1],
            weights: doc.weights[i].clone(),
            biases: doc.biases[i].clone(),
            activation: doc.activations[i],
        })
        .collect();
    let net = QNetwork::from_layers(layers).map_err(|e| FileError::Malformed(e.to_string()))?;
    if net.input_len() != doc.encoding.input_len() || net.output_len() != levelk_core::Action::COUNT {
        return Err(FileError::Malformed("network shape does not fit the encoding".into()));
    }
    if !(doc.temperature > 0.0) {
        return Err(FileError::Malformed("temperature must be positive".into()));
    }
    Ok(PolicyRef {
        level: doc.level,
        policy: Policy::Network {
            net,
            encoding: doc.encoding,
            temperature: doc.temperature,
        },
    })
}

pub fn policy_path(dir: &Path, level: u32) -> PathBuf {
    dir.join(format!("level{level}.policy.json"))
}

pub fn reward_path(dir: &Path, level: u32) -> PathBuf {
    dir.join(format!("level{level}.rewards.csv"))
}

/// Trained levels stored in `dir`, ascending, stopping at the first gap.
pub fn stored_levels(dir: &Path, max_level: u32) -> Vec<u32> {
    (1..=max_level).take_while(|&k| policy_path(dir, k).is_file()).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{0} not found")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Bad { path: PathBuf, source: FileError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub fn read_policy_file(path: &Path) -> Result<PolicyRef, RegistryError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => RegistryError::Missing(path.to_path_buf()),
        _ => RegistryError::Io(e),
    })?;
    load_policy(&bytes).map_err(|source| RegistryError::Bad {
        path: path.to_path_buf(),
        source,
    })
}

/// Registry holding levels `1..=top` from `dir`.
pub fn load_registry(dir: &Path, top: u32) -> Result<Registry, RegistryError> {
    let mut reg = Registry::new();
    for k in 1..=top {
        let path = policy_path(dir, k);
        let mut p = read_policy_file(&path)?;
        p.level = k;
        reg.insert(p).map_err(|e| RegistryError::Bad {
            path,
            source: FileError::Malformed(e.to_string()),
        })?;
    }
    Ok(reg)
}

/// Policy named `level0`, `uniform` or `levelK` (loaded from `dir`).
pub fn named_policy(name: &str, dir: &Path) -> Result<PolicyRef, RegistryError> {
    match name {
        "level0" => Ok(PolicyRef::level_zero()),
        "uniform" => Ok(PolicyRef::uniform()),
        _ => {
            let level: u32 = name
                .strip_prefix("level")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| RegistryError::Missing(PathBuf::from(name)))?;
            read_policy_file(&policy_path(dir, level))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedTrack {
    pub vehicle_id: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFile {
    pub version: u32,
    pub skipped_rows: usize,
    pub dropped_tracks: Vec<DroppedTrack>,
    pub drivers: Vec<EmpiricalPolicy>,
}

pub fn save_empirical(file: &EmpiricalFile) -> String {
    let mut s = serde_json::to_string(file).expect("empirical policies serialize");
    s.push('\n');
    s
}

pub fn load_empirical(bytes: &[u8]) -> Result<EmpiricalFile, FileError> {
    check_version(bytes, EMPIRICAL_VERSION)?;
    serde_json::from_slice(bytes).map_err(|e| FileError::Malformed(e.to_string()))
}
