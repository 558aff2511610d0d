//! Define-by-run tape.
//!
//! Each primitive evaluates eagerly and appends a node holding its output, so
//! node order is a topological order by construction. [`Graph::backward`]
//! walks the nodes in reverse exactly once and does not mutate the graph,
//! which makes repeated backward passes from one forward pass identical.

use std::collections::HashMap;

use super::kernels;
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Index of a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

/// Index of a tensor inside a [`ParamStore`](crate::layers::ParamStore).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul,
    Permute(Vec<usize>),
    Reshape,
    Add,
    Mul,
    Scale(f64),
    Relu,
    Sum,
    Mean(Vec<usize>),
    Softmax(usize),
    CausalConv { dilation: usize },
    LayerNorm { eps: f64 },
    CrossEntropy(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Constant,
    Trainable,
    Computed { requires_grad: bool },
}

#[derive(Debug, Clone)]
struct Node<S> {
    value: Tensor<S>,
    op: Op,
    inputs: Vec<NodeId>,
    kind: Kind,
}

impl<S> Node<S> {
    fn requires_grad(&self) -> bool {
        match self.kind {
            Kind::Constant => false,
            Kind::Trainable => true,
            Kind::Computed { requires_grad } => requires_grad,
        }
    }
}

/// Recorded computation. Single-threaded: it is built and consumed by one
/// training step.
#[derive(Debug, Clone)]
pub struct Graph<S> {
    nodes: Vec<Node<S>>,
    params: HashMap<ParamId, NodeId>,
}

/// Gradients of a scalar loss with respect to every trainable leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    by_node: HashMap<NodeId, Tensor<S>>,
    by_param: HashMap<ParamId, NodeId>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, node: NodeId) -> Option<&Tensor<S>> {
        self.by_node.get(&node)
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor<S>> {
        self.by_param.get(&id).and_then(|n| self.by_node.get(n))
    }

    pub fn len(&self) -> usize {
        self.by_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }

    /// Parameter gradients sorted by parameter index.
    pub fn params(&self) -> Vec<(ParamId, &Tensor<S>)> {
        let mut v: Vec<_> = self
            .by_param
            .iter()
            .filter_map(|(&p, n)| self.by_node.get(n).map(|g| (p, g)))
            .collect();
        v.sort_by_key(|(p, _)| *p);
        v
    }
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    fn push_leaf(&mut self, value: Tensor<S>, kind: Kind) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            inputs: Vec::new(),
            kind,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// A leaf that never receives a gradient (data, masks).
    pub fn constant(&mut self, value: Tensor<S>) -> NodeId {
        self.push_leaf(value, Kind::Constant)
    }

    /// A leaf whose gradient is reported by [`Graph::backward`].
    pub fn trainable(&mut self, value: Tensor<S>) -> NodeId {
        self.push_leaf(value, Kind::Trainable)
    }

    /// Trainable leaf bound to a stored parameter. Binding the same parameter
    /// twice returns the existing node, so weight sharing accumulates into a
    /// single gradient.
    pub fn param(&mut self, id: ParamId, value: &Tensor<S>) -> NodeId {
        if let Some(&n) = self.params.get(&id) {
            return n;
        }
        let n = self.push_leaf(value.clone(), Kind::Trainable);
        self.params.insert(id, n);
        n
    }

    fn push(&mut self, value: Tensor<S>, op: Op, inputs: Vec<NodeId>) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("{op:?} output")));
        }
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad());
        self.nodes.push(Node {
            value,
            op,
            inputs,
            kind: Kind::Computed { requires_grad },
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = kernels::matmul(self.value(a), self.value(b))?;
        self.push(v, Op::MatMul, vec![a, b])
    }

    pub fn permute(&mut self, x: NodeId, axes: &[usize]) -> Result<NodeId> {
        let v = kernels::permute(self.value(x), axes)?;
        self.push(v, Op::Permute(axes.to_vec()), vec![x])
    }

    /// Swaps the last two axes.
    pub fn transpose(&mut self, x: NodeId) -> Result<NodeId> {
        let r = self.value(x).rank();
        if r < 2 {
            return Err(Error::Axis { axis: 1, rank: r });
        }
        let mut axes: Vec<usize> = (0..r).collect();
        axes.swap(r - 2, r - 1);
        self.permute(x, &axes)
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.value(x).reshape(shape)?;
        self.push(v, Op::Reshape, vec![x])
    }

    /// `a + b`, where `b` has `a`'s shape or a suffix of it (bias broadcast).
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = kernels::zip_broadcast("add", self.value(a), self.value(b), |x, y| x + y)?;
        self.push(v, Op::Add, vec![a, b])
    }

    /// Elementwise `a * b` with the same broadcasting rule as [`Graph::add`].
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = kernels::zip_broadcast("mul", self.value(a), self.value(b), |x, y| x * y)?;
        self.push(v, Op::Mul, vec![a, b])
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let s = S::from_f64_lossy(c);
        let v = self.value(x).map(|e| e * s);
        self.push(v, Op::Scale(c), vec![x])
    }

    /// ReLU; the subgradient at exactly zero is zero.
    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self
            .value(x)
            .map(|e| if e > S::zero() { e } else { S::zero() });
        self.push(v, Op::Relu, vec![x])
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(x).sum());
        self.push(v, Op::Sum, vec![x])
    }

    /// Arithmetic mean over `axes`; reduced axes are removed from the shape.
    pub fn mean(&mut self, x: NodeId, axes: &[usize]) -> Result<NodeId> {
        let v = kernels::mean_axes(self.value(x), axes)?;
        self.push(v, Op::Mean(axes.to_vec()), vec![x])
    }

    pub fn softmax(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let v = kernels::softmax(self.value(x), axis)?;
        self.push(v, Op::Softmax(axis), vec![x])
    }

    /// Causal dilated convolution of `x (batch, in, T)` with
    /// `kernel (out, in, K)` and `bias (out)`.
    pub fn causal_conv1d(
        &mut self,
        x: NodeId,
        kernel: NodeId,
        bias: NodeId,
        dilation: usize,
    ) -> Result<NodeId> {
        let v = kernels::causal_conv1d(
            self.value(x),
            self.value(kernel),
            self.value(bias),
            dilation,
        )?;
        self.push(v, Op::CausalConv { dilation }, vec![x, kernel, bias])
    }

    /// Normalizes over the last axis, then applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> Result<NodeId> {
        let v = kernels::layer_norm(self.value(x), self.value(gain), self.value(bias), eps)?;
        self.push(v, Op::LayerNorm { eps }, vec![x, gain, bias])
    }

    /// Mean negative log-likelihood of `labels` under row-stochastic `probs
    /// (batch, K)`, with probabilities floored at `1e-12`.
    pub fn cross_entropy(&mut self, probs: NodeId, labels: &[usize]) -> Result<NodeId> {
        let v = kernels::cross_entropy(self.value(probs), labels)?;
        self.push(v, Op::CrossEntropy(labels.to_vec()), vec![probs])
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<S>> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<S>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::from_parts(lv.shape().to_vec(), vec![S::one()]));
        let mut out = HashMap::new();

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad() {
                grads[idx] = None;
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            if node.kind == Kind::Trainable {
                out.insert(NodeId(idx), g);
                continue;
            }
            let need: Vec<bool> = node
                .inputs
                .iter()
                .map(|i| self.nodes[i.0].requires_grad())
                .collect();
            let contributions = self.node_backward(node, &g, &need)?;
            for (input, contribution) in node.inputs.iter().zip(contributions) {
                if let Some(c) = contribution {
                    match &mut grads[input.0] {
                        Some(acc) => acc.add_assign(&c),
                        slot @ None => *slot = Some(c),
                    }
                }
            }
        }
        Ok(Gradients {
            by_param: self
                .params
                .iter()
                .filter(|(_, n)| out.contains_key(n))
                .map(|(&p, &n)| (p, n))
                .collect(),
            by_node: out,
        })
    }

    fn node_backward(
        &self,
        node: &Node<S>,
        g: &Tensor<S>,
        need: &[bool],
    ) -> Result<Vec<Option<Tensor<S>>>> {
        let input = |i: usize| &self.nodes[node.inputs[i].0].value;
        Ok(match &node.op {
            Op::Leaf => vec![],
            Op::MatMul => {
                let (da, db) = kernels::matmul_backward(input(0), input(1), g, need[0], need[1])?;
                vec![da, db]
            }
            Op::Permute(axes) => {
                vec![Some(kernels::permute(g, &kernels::inverse_permutation(axes))?)]
            }
            Op::Reshape => vec![Some(g.reshape(input(0).shape())?)],
            Op::Add => {
                let b_shape = input(1).shape();
                let db = need[1].then(|| kernels::reduce_to_suffix(g.data(), b_shape));
                vec![need[0].then(|| g.clone()), db]
            }
            Op::Mul => {
                let (a, b) = (input(0), input(1));
                let da = need[0]
                    .then(|| kernels::zip_broadcast("mul", g, b, |x, y| x * y))
                    .transpose()?;
                let db = if need[1] {
                    let prod: Vec<S> = g.data().iter().zip(a.data()).map(|(&x, &y)| x * y).collect();
                    Some(kernels::reduce_to_suffix(&prod, b.shape()))
                } else {
                    None
                };
                vec![da, db]
            }
            Op::Scale(c) => {
                let s = S::from_f64_lossy(*c);
                vec![Some(g.map(|e| e * s))]
            }
            Op::Relu => {
                let x = input(0);
                let data = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(&gv, &xv)| if xv > S::zero() { gv } else { S::zero() })
                    .collect();
                vec![Some(Tensor::from_parts(x.shape().to_vec(), data))]
            }
            Op::Sum => {
                let x = input(0);
                vec![Some(Tensor::from_parts(
                    x.shape().to_vec(),
                    vec![g.data()[0]; x.numel()],
                ))]
            }
            Op::Mean(axes) => vec![Some(kernels::mean_axes_backward(input(0).shape(), axes, g))],
            Op::Softmax(axis) => vec![Some(kernels::softmax_backward(&node.value, g, *axis))],
            Op::CausalConv { dilation } => {
                let cg = kernels::causal_conv1d_backward(
                    input(0),
                    input(1),
                    input(2),
                    *dilation,
                    g,
                    [need[0], need[1], need[2]],
                )?;
                vec![cg.x, cg.kernel, cg.bias]
            }
            Op::LayerNorm { eps } => {
                let (dx, dg, db) = kernels::layer_norm_backward(input(0), input(1), *eps, g);
                vec![Some(dx), Some(dg), Some(db)]
            }
            Op::CrossEntropy(labels) => {
                vec![Some(kernels::cross_entropy_backward(input(0), labels, g.data()[0]))]
            }
        })
    }
}
