use rand::Rng;

use super::{dropout, CausalConv1d, Mode, ParamStore};
use crate::error::Result;
use crate::tensor::{Graph, NodeId, Scalar};

/// TCN residual block:
/// `relu(skip(x) + drop(relu(conv2(drop(relu(conv1(x)))))))`.
///
/// Both convolutions share the block dilation. `skip` is the identity when
/// widths agree and a 1x1 convolution otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub conv1: CausalConv1d,
    pub conv2: CausalConv1d,
    pub skip: Option<CausalConv1d>,
    pub dropout_rate: f64,
}

impl ResidualBlock {
    #[allow(clippy::too_many_arguments)]
    pub fn new<S: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<S>,
        name: &str,
        in_filters: usize,
        out_filters: usize,
        kernel_size: usize,
        dilation: usize,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let conv1 = CausalConv1d::new(
            store,
            &format!("{name}.conv1"),
            in_filters,
            out_filters,
            kernel_size,
            dilation,
            rng,
        )?;
        let conv2 = CausalConv1d::new(
            store,
            &format!("{name}.conv2"),
            out_filters,
            out_filters,
            kernel_size,
            dilation,
            rng,
        )?;
        let skip = (in_filters != out_filters)
            .then(|| CausalConv1d::new(store, &format!("{name}.skip"), in_filters, out_filters, 1, 1, rng))
            .transpose()?;
        Ok(ResidualBlock {
            conv1,
            conv2,
            skip,
            dropout_rate,
        })
    }

    pub fn dilation(&self) -> usize {
        self.conv1.dilation
    }

    pub fn forward<S: Scalar>(
        &self,
        g: &mut Graph<S>,
        store: &ParamStore<S>,
        x: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId> {
        let h = self.conv1.forward(g, store, x)?;
        let h = g.relu(h)?;
        let h = dropout(g, h, self.dropout_rate, mode)?;
        let h = self.conv2.forward(g, store, h)?;
        let h = g.relu(h)?;
        let h = dropout(g, h, self.dropout_rate, mode)?;
        let s = match &self.skip {
            Some(proj) => proj.forward(g, store, x)?,
            None => x,
        };
        let sum = g.add(s, h)?;
        g.relu(sum)
    }
}
