use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{self, sha256_hex};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LSQGCKPT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    Autoencoder,
    Generator,
    Discriminator,
}

impl fmt::Display for CheckpointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckpointKind::Autoencoder => "autoencoder",
            CheckpointKind::Generator => "generator",
            CheckpointKind::Discriminator => "discriminator",
        })
    }
}

/// Flat parameters plus the configuration needed to rebuild the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub config: serde_json::Value,
    pub params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: CheckpointKind,
    config: serde_json::Value,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&Header { kind: self.kind, config: self.config.clone() })?;
        Ok(container::encode(MAGIC, &header, &self.params))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let d = container::decode(bytes, MAGIC, "checkpoint")?;
        let h: Header = serde_json::from_slice(d.header)?;
        Ok(Checkpoint { kind: h.kind, config: h.config, params: d.payload })
    }

    /// Hex SHA-256 of the serialized checkpoint.
    pub fn content_hash(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_bytes()?))
    }
}

/// Writes `ckpt` and returns its content hash.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<String> {
    let bytes = ckpt.to_bytes()?;
    std::fs::write(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

/// Reads a checkpoint of any kind.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}

/// Reads a checkpoint and checks its kind.
pub fn load_checkpoint(path: &Path, expected: CheckpointKind) -> Result<Checkpoint> {
    let c = read_checkpoint(path)?;
    if c.kind != expected {
        return Err(Error::KindMismatch { expected: expected.to_string(), found: c.kind.to_string() });
    }
    Ok(c)
}
