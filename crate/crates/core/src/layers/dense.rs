use rand::Rng;

use super::{glorot_normal_init, ParamStore};
use crate::error::Result;
use crate::tensor::{Graph, NodeId, ParamId, Scalar, Tensor};

/// Affine map over the last axis: `y = x @ weight + bias`, `weight (in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    pub fn new<S: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<S>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = glorot_normal_init(&[in_dim, out_dim], in_dim, out_dim, rng)?;
        Ok(Dense {
            weight: store.add(format!("{name}.weight"), w)?,
            bias: store.add(format!("{name}.bias"), Tensor::zeros(&[out_dim])?)?,
            in_dim,
            out_dim,
        })
    }

    pub fn forward<S: Scalar>(&self, g: &mut Graph<S>, store: &ParamStore<S>, x: NodeId) -> Result<NodeId> {
        let w = g.param(self.weight, store.get(self.weight));
        let b = g.param(self.bias, store.get(self.bias));
        let y = g.matmul(x, w)?;
        g.add(y, b)
    }
}
