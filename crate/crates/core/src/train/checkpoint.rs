//! Single-file checkpoint: one JSON manifest line, then one tensor record per
//! manifest entry in order (parameters, then Adam first and second moments).

use std::fs;
use std::io::{BufRead, Cursor, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamState, TrainConfig};
use crate::data::Normalization;
use crate::error::{Error, Result};
use crate::layers::ParamStore;
use crate::model::{IetNet, IetNetConfig};
use crate::tensor::{read_tensor, write_tensor, Tensor};

pub const CHECKPOINT_FORMAT: &str = "ietnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Dataset facts needed to run a checkpoint on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// 1-based epoch the weights come from.
    pub epoch: usize,
    /// Optimizer steps taken when the weights were captured.
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: Option<f64>,
    pub val_accuracy: f64,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub dataset: Option<DatasetInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: IetNetConfig,
    pub params: ParamStore<f32>,
    pub optimizer: AdamState<f32>,
    pub meta: CheckpointMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorGroup {
    Param,
    AdamM,
    AdamV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub group: TensorGroup,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub config: IetNetConfig,
    pub meta: CheckpointMeta,
    pub adam: AdamHyper,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Checkpoint {
    /// Rebuilds the network around the stored parameters.
    pub fn model(&self) -> Result<IetNet<f32>> {
        IetNet::from_store(self.config.clone(), self.params.clone())
    }

    pub fn manifest(&self) -> Manifest {
        let mut tensors = Vec::with_capacity(3 * self.params.len());
        for group in [TensorGroup::Param, TensorGroup::AdamM, TensorGroup::AdamV] {
            for (_, name, t) in self.params.iter() {
                tensors.push(TensorEntry {
                    name: name.to_string(),
                    group,
                    shape: t.shape().to_vec(),
                });
            }
        }
        Manifest {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            meta: self.meta.clone(),
            adam: AdamHyper {
                t: self.optimizer.t,
                beta1: self.optimizer.beta1,
                beta2: self.optimizer.beta2,
                eps: self.optimizer.eps,
            },
            tensors,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(&self.manifest())?;
        out.push(b'\n');
        let params = self.params.iter().map(|(_, _, t)| t);
        for t in params.chain(&self.optimizer.m).chain(&self.optimizer.v) {
            write_tensor(&mut out, t).map_err(|e| Error::io("<memory>", e))?;
        }
        Ok(out)
    }

    /// Parses a whole checkpoint; nothing is returned unless every record
    /// matches the manifest and no bytes are left over.
    pub fn from_bytes(bytes: &[u8], source: &str) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line).map_err(|e| Error::io(source, e))?;
        let manifest: Manifest = serde_json::from_slice(&line)
            .map_err(|e| Error::format(source, format!("bad manifest: {e}")))?;
        if manifest.format != CHECKPOINT_FORMAT {
            return Err(Error::format(source, format!("not a checkpoint ({:?})", manifest.format)));
        }
        if manifest.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                source,
                format!("checkpoint version {} (expected {CHECKPOINT_VERSION})", manifest.version),
            ));
        }
        let mut params = ParamStore::new();
        let (mut m, mut v) = (Vec::new(), Vec::new());
        for entry in &manifest.tensors {
            let t: Tensor<f32> = read_tensor(&mut r, source)?;
            if t.shape() != entry.shape.as_slice() {
                return Err(Error::format(
                    source,
                    format!("{} has shape {:?}, manifest says {:?}", entry.name, t.shape(), entry.shape),
                ));
            }
            match entry.group {
                TensorGroup::Param => {
                    params.add(entry.name.clone(), t)?;
                }
                TensorGroup::AdamM => m.push(t),
                TensorGroup::AdamV => v.push(t),
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(|e| Error::io(source, e))?;
        if !rest.is_empty() {
            return Err(Error::format(source, format!("{} trailing bytes", rest.len())));
        }
        if m.len() != params.len() || v.len() != params.len() {
            return Err(Error::format(source, "optimizer moments do not match parameters"));
        }
        // validates names and shapes against the architecture
        IetNet::from_store(manifest.config.clone(), params.clone())?;
        Ok(Checkpoint {
            config: manifest.config,
            params,
            optimizer: AdamState {
                m,
                v,
                t: manifest.adam.t,
                beta1: manifest.adam.beta1,
                beta2: manifest.adam.beta2,
                eps: manifest.adam.eps,
            },
            meta: manifest.meta,
        })
    }
}

pub fn save_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = c.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes, &path.display().to_string())
}
