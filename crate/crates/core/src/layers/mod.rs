//! Neural layers assembled from tape primitives.
//!
//! Layers hold [`ParamId`]s into a [`ParamStore`] rather than tensors, so a
//! single store can be optimized, serialized, or cast to another precision
//! without touching the layer structure.

mod attention;
mod conv;
mod dense;
mod dropout;
mod init;
mod residual;

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;

pub use attention::{AttentionOutput, MultiHeadAttention, LAYER_NORM_EPS};
pub use conv::{causal_dilated_conv1d, CausalConv1d};
pub use dense::Dense;
pub use dropout::{dropout, dropout_apply};
pub use init::glorot_normal_init;
pub use residual::ResidualBlock;

use crate::error::{Error, Result};
use crate::tensor::{ParamId, Scalar, Tensor};

/// Whether a forward pass is training (dropout active) or inference.
pub enum Mode<'a> {
    Inference,
    Training(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Training(_))
    }
}

/// Named, ordered collection of parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<S> {
    names: Vec<String>,
    tensors: Vec<Tensor<S>>,
    index: HashMap<String, ParamId>,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<S>) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        let id = ParamId(self.tensors.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor);
        Ok(id)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<S> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<S>)> {
        self.ids()
            .zip(self.names.iter().zip(&self.tensors))
            .map(|(id, (n, t))| (id, n.as_str(), t))
    }

    /// Total number of scalar weights.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            index: self.index.clone(),
        }
    }

    /// Replaces the tensor under `name`, keeping its id. Shapes must agree.
    pub fn set(&mut self, name: &str, tensor: Tensor<S>) -> Result<()> {
        let id = self
            .id(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter {name}")))?;
        if self.tensors[id.0].shape() != tensor.shape() {
            return Err(Error::Dimension {
                op: "ParamStore::set",
                lhs: self.tensors[id.0].shape().to_vec(),
                rhs: tensor.shape().to_vec(),
            });
        }
        self.tensors[id.0] = tensor;
        Ok(())
    }
}
