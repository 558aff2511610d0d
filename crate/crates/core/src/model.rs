//! The full network: a shared TCN turns every channel into a feature vector,
//! attention over channels produces a per-class channel gate, and the gated
//! features are pooled into class scores.
//!
//! ```text
//! x (B, C, T) ─ shared TCN per channel ─ mean over T ─▶ M (B, C, F)
//! M ─ attention ─ dense ─ softmax over C ─▶ G (B, C, K)
//! logits[b,k] = mean_{c,f} M[b,c,f] * G[b,c,k]      probs = softmax_k(logits)
//! ```
//!
//! Each gate column `G[b, :, k]` is a distribution over channels and is the
//! explanation for class `k` on instance `b`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{Dense, Mode, MultiHeadAttention, ParamStore, ResidualBlock};
use crate::tensor::{Graph, NodeId, Scalar, Tensor};

/// Architecture hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IetNetConfig {
    pub n_channels: usize,
    pub n_classes: usize,
    pub seq_len: usize,
    pub tcn_filters: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub d_model: usize,
    pub attention_heads: usize,
    /// ReLU on the query/key/value projections.
    pub attention_relu: bool,
    pub dropout_rate: f64,
}

impl Default for IetNetConfig {
    fn default() -> Self {
        IetNetConfig {
            n_channels: 8,
            n_classes: 2,
            seq_len: 2000,
            tcn_filters: 16,
            kernel_size: 2,
            dilations: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
            d_model: 16,
            attention_heads: 1,
            attention_relu: true,
            dropout_rate: 0.5,
        }
    }
}

/// Parameter count quoted for the reference implementation of this
/// architecture; printed next to ours for comparison.
pub const REFERENCE_WEIGHT_COUNT: usize = 27_648;

impl IetNetConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_channels == 0 || self.n_classes == 0 || self.seq_len == 0 {
            return err("n_channels, n_classes and seq_len must be positive".into());
        }
        if self.tcn_filters == 0 || self.kernel_size == 0 {
            return err("tcn_filters and kernel_size must be positive".into());
        }
        if self.d_model != self.tcn_filters {
            return err(format!(
                "d_model ({}) must equal tcn_filters ({})",
                self.d_model, self.tcn_filters
            ));
        }
        if self.dilations.is_empty() {
            return err("at least one dilation is required".into());
        }
        for w in self.dilations.windows(2) {
            if w[1] <= w[0] {
                return err(format!("dilations must be strictly increasing: {:?}", self.dilations));
            }
        }
        if let Some(d) = self.dilations.iter().find(|d| !d.is_power_of_two()) {
            return err(format!("dilation {d} is not a power of two"));
        }
        if self.attention_heads == 0 || self.d_model % self.attention_heads != 0 {
            return err(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.attention_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return err(format!("dropout_rate {} not in [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    /// Span of input steps visible to the last TCN output:
    /// `1 + 2 (K - 1) sum(dilations)` with two convolutions per block.
    pub fn receptive_field(&self) -> usize {
        1 + 2 * (self.kernel_size - 1) * self.dilations.iter().sum::<usize>()
    }
}

/// Node ids of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardNodes {
    /// `M (B, C, F)`
    pub features: NodeId,
    /// `(B, heads, C, C)`
    pub attention: NodeId,
    /// `G (B, C, K)`
    pub gate: NodeId,
    /// `(B, K)`
    pub logits: NodeId,
    /// `(B, K)`
    pub probs: NodeId,
}

/// Materialized inference results.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S> {
    pub probs: Tensor<S>,
    pub logits: Tensor<S>,
    pub gate: Tensor<S>,
}

impl<S: Scalar> Prediction<S> {
    pub fn predicted_classes(&self) -> Vec<usize> {
        let k = self.probs.shape()[1];
        self.probs
            .data()
            .chunks_exact(k)
            .map(|row| {
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IetNet<S> {
    pub config: IetNetConfig,
    pub store: ParamStore<S>,
    pub blocks: Vec<ResidualBlock>,
    pub attention: MultiHeadAttention,
    pub head: Dense,
}

impl<S: Scalar> IetNet<S> {
    /// Glorot-initialized network; `seed` fully determines the weights.
    pub fn new(config: IetNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut blocks = Vec::with_capacity(config.dilations.len());
        let mut width = 1;
        for (i, &d) in config.dilations.iter().enumerate() {
            blocks.push(ResidualBlock::new(
                &mut store,
                &format!("tcn.block{i}"),
                width,
                config.tcn_filters,
                config.kernel_size,
                d,
                config.dropout_rate,
                &mut rng,
            )?);
            width = config.tcn_filters;
        }
        let attention = MultiHeadAttention::new(
            &mut store,
            "gate.attention",
            config.d_model,
            config.attention_heads,
            config.attention_relu,
            config.dropout_rate,
            &mut rng,
        )?;
        let head = Dense::new(&mut store, "gate.dense", config.d_model, config.n_classes, &mut rng)?;
        Ok(IetNet {
            config,
            store,
            blocks,
            attention,
            head,
        })
    }

    /// Rebuilds the layer structure for `config` and adopts `store`, which
    /// must contain exactly the expected parameter names and shapes.
    pub fn from_store(config: IetNetConfig, store: ParamStore<S>) -> Result<Self> {
        let mut net = Self::new(config, 0)?;
        if store.len() != net.store.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, found {}",
                net.store.len(),
                store.len()
            )));
        }
        for (_, name, t) in store.iter() {
            net.store.set(name, t.clone())?;
        }
        Ok(net)
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn cast<T: Scalar>(&self) -> IetNet<T> {
        IetNet {
            config: self.config.clone(),
            store: self.store.cast(),
            blocks: self.blocks.clone(),
            attention: self.attention.clone(),
            head: self.head.clone(),
        }
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let c = &self.config;
        if shape.len() != 3 || shape[1] != c.n_channels || shape[2] != c.seq_len {
            return Err(Error::Dimension {
                op: "IetNet input (batch, channels, seq_len)",
                lhs: shape.to_vec(),
                rhs: vec![c.n_channels, c.seq_len],
            });
        }
        Ok(())
    }

    /// Runs every channel through the shared TCN independently and averages
    /// over time: `(B, C, T) -> (B, C, F)`.
    pub fn extract_features(&self, g: &mut Graph<S>, x: NodeId, mode: &mut Mode<'_>) -> Result<NodeId> {
        let shape = g.shape(x).to_vec();
        self.check_input(&shape)?;
        let (b, c, t) = (shape[0], shape[1], shape[2]);
        let mut h = g.reshape(x, &[b * c, 1, t])?;
        for block in &self.blocks {
            h = block.forward(g, &self.store, h, mode)?;
        }
        let pooled = g.mean(h, &[2])?;
        g.reshape(pooled, &[b, c, self.config.tcn_filters])
    }

    /// Attention across channels, per-channel class scores, softmax over the
    /// channel axis. Returns `(gate, attention weights)`.
    pub fn channel_gate(&self, g: &mut Graph<S>, m: NodeId, mode: &mut Mode<'_>) -> Result<(NodeId, NodeId)> {
        let att = self.attention.forward(g, &self.store, m, mode)?;
        let scores = self.head.forward(g, &self.store, att.output)?;
        let gate = g.softmax(scores, 1)?;
        Ok((gate, att.weights))
    }

    /// Gated global average pooling. Returns `(logits, probs)`.
    pub fn classify(&self, g: &mut Graph<S>, m: NodeId, gate: NodeId) -> Result<(NodeId, NodeId)> {
        classify(g, m, gate)
    }

    pub fn forward(&self, g: &mut Graph<S>, x: NodeId, mode: &mut Mode<'_>) -> Result<ForwardNodes> {
        let features = self.extract_features(g, x, mode)?;
        let (gate, attention) = self.channel_gate(g, features, mode)?;
        let (logits, probs) = self.classify(g, features, gate)?;
        Ok(ForwardNodes {
            features,
            attention,
            gate,
            logits,
            probs,
        })
    }

    /// Inference over `x (N, C, T)` in chunks of `chunk` samples.
    pub fn predict(&self, x: &Tensor<S>, chunk: usize) -> Result<Prediction<S>> {
        self.check_input(x.shape())?;
        let (n, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let k = self.config.n_classes;
        let chunk = chunk.max(1);
        let (mut probs, mut logits, mut gate) = (Vec::new(), Vec::new(), Vec::new());
        for start in (0..n).step_by(chunk) {
            let end = (start + chunk).min(n);
            let slice = x.data()[start * c * t..end * c * t].to_vec();
            let mut g = Graph::new();
            let xn = g.constant(Tensor::new(vec![end - start, c, t], slice)?);
            let out = self.forward(&mut g, xn, &mut Mode::Inference)?;
            probs.extend_from_slice(g.value(out.probs).data());
            logits.extend_from_slice(g.value(out.logits).data());
            gate.extend_from_slice(g.value(out.gate).data());
        }
        Ok(Prediction {
            probs: Tensor::new(vec![n, k], probs)?,
            logits: Tensor::new(vec![n, k], logits)?,
            gate: Tensor::new(vec![n, c, k], gate)?,
        })
    }
}

/// `logits[b,k] = mean over (c, f) of M[b,c,f] * G[b,c,k]`, then softmax over k.
pub fn classify<S: Scalar>(g: &mut Graph<S>, m: NodeId, gate: NodeId) -> Result<(NodeId, NodeId)> {
    let (ms, gs) = (g.shape(m).to_vec(), g.shape(gate).to_vec());
    if ms.len() != 3 || gs.len() != 3 || ms[..2] != gs[..2] {
        return Err(Error::Dimension {
            op: "classify",
            lhs: ms,
            rhs: gs,
        });
    }
    let channels = ms[1];
    let gt = g.permute(gate, &[0, 2, 1])?; // (B, K, C)
    let pooled = g.matmul(gt, m)?; // (B, K, F): sum over c of G * M
    let mean_f = g.mean(pooled, &[2])?;
    let logits = g.scale(mean_f, 1.0 / channels as f64)?;
    let probs = g.softmax(logits, 1)?;
    Ok((logits, probs))
}
