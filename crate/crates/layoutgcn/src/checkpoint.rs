//! Checkpoint and manifest files.
//!
//! A checkpoint is one JSON document: a format tag, the model kind, the
//! training seed, a config snapshot, the label names, named parameter
//! tensors (shape plus row-major data), and the loss history. JSON numbers
//! round-trip f64 exactly (writers emit the shortest representation that
//! parses back to the same bits), so saving and reloading reproduces the
//! model bit for bit; nothing time- or host-dependent is written, so equal
//! training runs produce byte-identical files.
//!
//! A manifest records what a command ran with: config, named seeds, input
//! paths, and the SHA-256 of every checkpoint it wrote. Re-running the
//! command with the same manifest inputs must reproduce those hashes.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "layoutgcn.checkpoint.v1";
pub const MANIFEST_FORMAT: &str = "layoutgcn.manifest.v1";

/// One tensor: shape and row-major values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorData {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl TensorData {
    pub fn from_array(a: &Array2<f64>) -> TensorData {
        TensorData {
            shape: [a.nrows(), a.ncols()],
            data: a.iter().copied().collect(),
        }
    }

    pub fn to_array(&self) -> Result<Array2<f64>> {
        if self.shape[0] * self.shape[1] != self.data.len() {
            return Err(Error::Data(format!(
                "tensor data length {} does not match shape {} x {}",
                self.data.len(),
                self.shape[0],
                self.shape[1]
            )));
        }
        Array2::from_shape_vec((self.shape[0], self.shape[1]), self.data.clone())
            .map_err(|e| Error::Data(format!("tensor shape rejected: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    /// Model kind, e.g. "gcn.den1", "fusion", "relations".
    pub kind: String,
    pub seed: u64,
    /// Snapshot of the hyperparameters the model was built with.
    pub config: serde_json::Value,
    /// Label names in class-index order (empty where classes don't apply).
    pub labels: Vec<String>,
    pub params: BTreeMap<String, TensorData>,
    pub loss_history: Vec<f64>,
}

impl Checkpoint {
    pub fn new(kind: &str, seed: u64, config: serde_json::Value, labels: Vec<String>) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            kind: kind.to_string(),
            seed,
            config,
            labels,
            params: BTreeMap::new(),
            loss_history: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: &Array2<f64>) {
        self.params.insert(name.to_string(), TensorData::from_array(tensor));
    }

    pub fn tensor(&self, name: &str) -> Result<Array2<f64>> {
        self.params
            .get(name)
            .ok_or_else(|| Error::Data(format!("checkpoint has no tensor {name:?}")))?
            .to_array()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        for (name, t) in &self.params {
            if let Some(bad) = t.data.iter().find(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "refusing to write non-finite value {bad} in tensor {name:?}"
                )));
            }
        }
        let body = serde_json::to_string(self)
            .map_err(|e| Error::Data(format!("checkpoint serialization failed: {e}")))?;
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&body)
            .map_err(|e| Error::Data(format!("{} is not a valid checkpoint: {e}", path.display())))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Data(format!(
                "{} has format {:?}, expected {:?}",
                path.display(),
                ck.format,
                CHECKPOINT_FORMAT
            )));
        }
        Ok(ck)
    }
}

/// Reproducibility record written next to a command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Logical name -> input path as given.
    pub inputs: BTreeMap<String, String>,
    /// Checkpoint file name -> SHA-256 hex digest.
    pub checkpoint_hashes: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            command: command.to_string(),
            config,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            checkpoint_hashes: BTreeMap::new(),
        }
    }

    /// Hash a written checkpoint file and record it under its file name.
    pub fn record_checkpoint(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.checkpoint_hashes.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("manifest serialization failed: {e}")))?;
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&body)
            .map_err(|e| Error::Data(format!("{} is not a valid manifest: {e}", path.display())))?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Data(format!(
                "{} has format {:?}, expected {:?}",
                path.display(),
                m.format,
                MANIFEST_FORMAT
            )));
        }
        Ok(m)
    }
}

/// SHA-256 of a file's bytes, lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}
