use rand::Rng;

use super::{glorot_normal_init, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{kernels, Graph, NodeId, ParamId, Scalar, Tensor};

/// Causal dilated convolution: `out[b,f,t] = bias[f] + sum_{c,j} kernel[f,c,j]
/// * x[b,c,t-(K-1-j)*d]`, zero-padded on the left so the output keeps the
/// input length and never looks at future time steps.
pub fn causal_dilated_conv1d<S: Scalar>(
    x: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    dilation: usize,
) -> Result<Tensor<S>> {
    kernels::causal_conv1d(x, kernel, bias, dilation)
}

/// Parameters of one causal convolution: `kernel (out, in, K)`, `bias (out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalConv1d {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub in_filters: usize,
    pub out_filters: usize,
    pub kernel_size: usize,
    pub dilation: usize,
}

impl CausalConv1d {
    pub fn new<S: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<S>,
        name: &str,
        in_filters: usize,
        out_filters: usize,
        kernel_size: usize,
        dilation: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if kernel_size == 0 || dilation == 0 {
            return Err(Error::Config(format!(
                "{name}: kernel_size and dilation must be >= 1"
            )));
        }
        let kernel = glorot_normal_init(
            &[out_filters, in_filters, kernel_size],
            in_filters * kernel_size,
            out_filters * kernel_size,
            rng,
        )?;
        Ok(CausalConv1d {
            kernel: store.add(format!("{name}.kernel"), kernel)?,
            bias: store.add(format!("{name}.bias"), Tensor::zeros(&[out_filters])?)?,
            in_filters,
            out_filters,
            kernel_size,
            dilation,
        })
    }

    pub fn forward<S: Scalar>(
        &self,
        g: &mut Graph<S>,
        store: &ParamStore<S>,
        x: NodeId,
    ) -> Result<NodeId> {
        let k = g.param(self.kernel, store.get(self.kernel));
        let b = g.param(self.bias, store.get(self.bias));
        g.causal_conv1d(x, k, b, self.dilation)
    }
}
