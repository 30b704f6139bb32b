//! Checkpoint files.
//!
//! Layout:
//!
//! ```text
//! b"UCNCKPT\0"            8 bytes
//! manifest length          u64 little endian
//! manifest                 JSON, UTF-8
//! parameters               f64 little endian, networks back to back
//! ```
//!
//! The manifest records each network's layer sizes and parameter count, the
//! seeds and step counters of the run, and a SHA-256 of the parameter bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, OutputActivation};
use crate::config::hex_digest;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UCNCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub name: String,
    pub sizes: Vec<usize>,
    pub output: OutputActivation,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Which trainer produced the file, e.g. `ddpg`.
    pub kind: String,
    pub networks: Vec<NetworkEntry>,
    pub seeds: BTreeMap<String, u64>,
    pub steps: BTreeMap<String, u64>,
    /// Free-form trainer settings needed to rebuild the agent.
    pub meta: serde_json::Value,
    pub params_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub networks: Vec<(String, Mlp)>,
    pub seeds: BTreeMap<String, u64>,
    pub steps: BTreeMap<String, u64>,
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>) -> Self {
        Checkpoint {
            kind: kind.into(),
            networks: Vec::new(),
            seeds: BTreeMap::new(),
            steps: BTreeMap::new(),
            meta: serde_json::Value::Null,
        }
    }

    pub fn network(&self, name: &str) -> Option<&Mlp> {
        self.networks.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut params = Vec::new();
        for (_, net) in &self.networks {
            for p in net.params() {
                params.extend_from_slice(&p.to_le_bytes());
            }
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            kind: self.kind.clone(),
            networks: self
                .networks
                .iter()
                .map(|(name, net)| NetworkEntry {
                    name: name.clone(),
                    sizes: net.sizes().to_vec(),
                    output: net.output_activation(),
                    params: net.num_params(),
                })
                .collect(),
            seeds: self.seeds.clone(),
            steps: self.steps.clone(),
            meta: self.meta.clone(),
            params_sha256: hex_digest(&params),
        };
        let manifest = serde_json::to_vec(&manifest).expect("manifest serializes");
        let mut out = Vec::with_capacity(16 + manifest.len() + params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&params);
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Checkpoint {
            path: origin.to_path_buf(),
            reason,
        };
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(fail("not a checkpoint file (bad magic)".into()));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() < len {
            return Err(fail("truncated manifest".into()));
        }
        let manifest: Manifest = serde_json::from_slice(&body[..len])
            .map_err(|e| fail(format!("unreadable manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(fail(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let params = &body[len..];
        let digest = hex_digest(params);
        if digest != manifest.params_sha256 {
            return Err(fail(format!(
                "checksum mismatch: manifest says {}, parameters hash to {digest}",
                manifest.params_sha256
            )));
        }
        let expected: usize = manifest.networks.iter().map(|n| n.params).sum();
        if params.len() != expected * 8 {
            return Err(fail(format!(
                "parameter section holds {} bytes, manifest needs {}",
                params.len(),
                expected * 8
            )));
        }
        let mut values = params
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut networks = Vec::with_capacity(manifest.networks.len());
        for entry in &manifest.networks {
            let flat: Vec<f64> = values.by_ref().take(entry.params).collect();
            let net = Mlp::from_params(&entry.sizes, entry.output, flat)
                .map_err(|e| fail(format!("network {}: {e}", entry.name)))?;
            networks.push((entry.name.clone(), net));
        }
        Ok(Checkpoint {
            kind: manifest.kind,
            networks,
            seeds: manifest.seeds,
            steps: manifest.steps,
            meta: manifest.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
