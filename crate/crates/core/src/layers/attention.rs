use rand::Rng;

use super::{dropout, glorot_normal_init, Mode, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Graph, NodeId, ParamId, Scalar, Tensor};

pub const LAYER_NORM_EPS: f64 = 1e-6;

/// Multi-headed dot-product self-attention over the channel axis with a
/// post-norm residual connection:
///
/// ```text
/// Q, K, V = act(M Wq), act(M Wk), act(M Wv)      act = relu or identity
/// A       = softmax(Q K^T / sqrt(d_head))        per head, over channels
/// out     = layer_norm(M + drop((A V) Wo))
/// ```
///
/// Channels play the role of sequence positions and carry no positional
/// encoding, so the block is permutation-equivariant in the channel axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    pub wq: ParamId,
    pub wk: ParamId,
    pub wv: ParamId,
    pub wo: ParamId,
    pub ln_gain: ParamId,
    pub ln_bias: ParamId,
    pub d_model: usize,
    pub heads: usize,
    pub relu_projections: bool,
    pub dropout_rate: f64,
}

/// Node ids produced by [`MultiHeadAttention::forward`].
#[derive(Debug, Clone, Copy)]
pub struct AttentionOutput {
    /// `(batch, C, d_model)`
    pub output: NodeId,
    /// `(batch, heads, C, C)`, each row a distribution over channels.
    pub weights: NodeId,
}

impl MultiHeadAttention {
    pub fn new<S: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<S>,
        name: &str,
        d_model: usize,
        heads: usize,
        relu_projections: bool,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || d_model % heads != 0 {
            return Err(Error::Config(format!(
                "d_model {d_model} is not divisible by {heads} heads"
            )));
        }
        let mut proj = |suffix: &str, store: &mut ParamStore<S>| -> Result<ParamId> {
            let w = glorot_normal_init(&[d_model, d_model], d_model, d_model, rng)?;
            store.add(format!("{name}.{suffix}"), w)
        };
        let wq = proj("wq", store)?;
        let wk = proj("wk", store)?;
        let wv = proj("wv", store)?;
        let wo = proj("wo", store)?;
        Ok(MultiHeadAttention {
            wq,
            wk,
            wv,
            wo,
            ln_gain: store.add(format!("{name}.ln.gain"), Tensor::ones(&[d_model])?)?,
            ln_bias: store.add(format!("{name}.ln.bias"), Tensor::zeros(&[d_model])?)?,
            d_model,
            heads,
            relu_projections,
            dropout_rate,
        })
    }

    pub fn forward<S: Scalar>(
        &self,
        g: &mut Graph<S>,
        store: &ParamStore<S>,
        m: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<AttentionOutput> {
        let shape = g.shape(m).to_vec();
        if shape.len() != 3 || shape[2] != self.d_model {
            return Err(Error::Dimension {
                op: "attention",
                lhs: shape,
                rhs: vec![self.d_model],
            });
        }
        let (batch, channels) = (shape[0], shape[1]);
        let d_head = self.d_model / self.heads;

        let project = |g: &mut Graph<S>, w: ParamId| -> Result<NodeId> {
            let wn = g.param(w, store.get(w));
            let p = g.matmul(m, wn)?;
            let p = if self.relu_projections { g.relu(p)? } else { p };
            // (B, C, d) -> (B, H, C, d_head)
            let p = g.reshape(p, &[batch, channels, self.heads, d_head])?;
            g.permute(p, &[0, 2, 1, 3])
        };
        let q = project(g, self.wq)?;
        let k = project(g, self.wk)?;
        let v = project(g, self.wv)?;

        let kt = g.transpose(k)?;
        let scores = g.matmul(q, kt)?;
        let scores = g.scale(scores, 1.0 / (d_head as f64).sqrt())?;
        let weights = g.softmax(scores, 3)?;
        let ctx = g.matmul(weights, v)?;
        let ctx = g.permute(ctx, &[0, 2, 1, 3])?;
        let ctx = g.reshape(ctx, &[batch, channels, self.d_model])?;

        let wo = g.param(self.wo, store.get(self.wo));
        let o = g.matmul(ctx, wo)?;
        let o = dropout(g, o, self.dropout_rate, mode)?;
        let res = g.add(m, o)?;
        let gain = g.param(self.ln_gain, store.get(self.ln_gain));
        let bias = g.param(self.ln_bias, store.get(self.ln_bias));
        let output = g.layer_norm(res, gain, bias, LAYER_NORM_EPS)?;
        Ok(AttentionOutput { output, weights })
    }
}
