//! Binary run checkpoint.
//!
//! Layout: the 8-byte magic `PEPLCKPT`, a little-endian `u32` format version,
//! a little-endian `u64` header length, a UTF-8 JSON header, then every
//! parameter tensor followed by every optimizer velocity tensor as raw
//! little-endian `f32`. Tensor lengths are listed in the header. Floats in
//! the header are written in shortest round-trip form, so a save/load cycle
//! is bit-exact.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{PeplError, Result};
use crate::model::{ToyBackbone, ToyBackboneConfig};
use crate::threshold::ThresholdState;

const MAGIC: &[u8; 8] = b"PEPLCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config: RunConfig,
    backbone: ToyBackboneConfig,
    step: u64,
    thresholds: ThresholdState,
    rng: ChaCha8Rng,
    param_lens: Vec<usize>,
    velocity_lens: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub backbone: ToyBackboneConfig,
    /// Number of completed optimizer steps.
    pub step: u64,
    pub thresholds: ThresholdState,
    pub rng: ChaCha8Rng,
    pub params: Vec<Vec<f32>>,
    /// Empty when the optimizer state was not saved.
    pub velocity: Vec<Vec<f32>>,
}

fn format_err(reason: impl Into<String>) -> PeplError {
    PeplError::Format {
        what: "checkpoint",
        reason: reason.into(),
    }
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(format_err("truncated file"));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

impl Checkpoint {
    pub fn model(&self) -> Result<ToyBackbone> {
        let mut model = ToyBackbone::new(self.backbone.clone())?;
        model.load_params(&self.params)?;
        Ok(model)
    }

    pub fn num_classes(&self) -> usize {
        self.backbone.num_classes
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            config: self.config.clone(),
            backbone: self.backbone.clone(),
            step: self.step,
            thresholds: self.thresholds.clone(),
            rng: self.rng.clone(),
            param_lens: self.params.iter().map(Vec::len).collect(),
            velocity_lens: self.velocity.iter().map(Vec::len).collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let floats: usize = self.params.iter().chain(&self.velocity).map(Vec::len).sum();
        let mut out = Vec::with_capacity(20 + json.len() + 4 * floats);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in self.params.iter().chain(&self.velocity).flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        if take(&mut bytes, 8)? != MAGIC {
            return Err(format_err("bad magic"));
        }
        let version = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(format_err(format!("unsupported version {version}")));
        }
        let len = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().expect("8 bytes")) as usize;
        let header: Header = serde_json::from_slice(take(&mut bytes, len)?)?;
        let mut read = |lens: &[usize]| -> Result<Vec<Vec<f32>>> {
            lens.iter()
                .map(|&n| {
                    Ok(take(&mut bytes, 4 * n)?
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                        .collect())
                })
                .collect()
        };
        let params = read(&header.param_lens)?;
        let velocity = read(&header.velocity_lens)?;
        if !bytes.is_empty() {
            return Err(format_err("trailing bytes"));
        }
        Ok(Self {
            config: header.config,
            backbone: header.backbone,
            step: header.step,
            thresholds: header.thresholds,
            rng: header.rng,
            params,
            velocity,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| PeplError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| PeplError::io(path, e))?)
    }
}
