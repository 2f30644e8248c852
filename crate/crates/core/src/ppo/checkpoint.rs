//! Self-describing policy checkpoints: a magic line, a little-endian `u64`
//! header length, a JSON header echoing the configuration, then the
//! parameters as little-endian `f32`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainerConfig;
use super::normalizer::RunningNorm;
use super::policy::{Policy, PolicyArch, ValueNorm};
use crate::error::{Error, Result};
use crate::sim::EnvConfig;

pub const MAGIC: &[u8] = b"ECOMARL-CKPT-1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub arch: PolicyArch,
    pub trainer: TrainerConfig,
    pub env: EnvConfig,
    pub steps: u64,
    pub param_count: usize,
    pub normalizer: Option<RunningNorm>,
    pub value_norm: ValueNorm,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f32>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        let mut out = Vec::with_capacity(MAGIC.len() + 8 + header.len() + 4 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Io(format!("checkpoint: {m}"));
        let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("missing magic"))?;
        if rest.len() < 8 {
            return Err(bad("truncated header length"));
        }
        let len = u64::from_le_bytes(rest[..8].try_into().expect("8 bytes")) as usize;
        let rest = &rest[8..];
        if rest.len() < len {
            return Err(bad("truncated header"));
        }
        let header: CheckpointHeader = serde_json::from_slice(&rest[..len]).map_err(|e| bad(&e.to_string()))?;
        let body = &rest[len..];
        if body.len() != 4 * header.param_count {
            return Err(bad(&format!(
                "expected {} parameters, found {} bytes",
                header.param_count,
                body.len()
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self { header, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Copies the stored parameters into a policy of matching architecture.
    pub fn restore_into(&self, policy: &mut Policy<f32>) -> Result<()> {
        if policy.arch != self.header.arch || policy.params.len() != self.params.len() {
            return Err(Error::config(
                "checkpoint",
                "architecture does not match the configured environment and network",
            ));
        }
        policy.params.copy_from_slice(&self.params);
        policy.value_norm = self.header.value_norm;
        Ok(())
    }
}
