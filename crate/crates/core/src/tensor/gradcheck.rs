use super::{Graph, NodeId, Tensor};
use crate::error::{Error, Result};

/// `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares the tape gradient of a scalar function against central
/// differences and returns the largest [`relative_error`] over coordinates.
///
/// `f` receives a fresh graph and the node holding `x`, and must return a
/// scalar node. It must be deterministic.
pub fn finite_diff_check<F>(f: F, x: &Tensor<f64>, step: f64) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, NodeId) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let input = g.trainable(x.clone());
    let loss = f(&mut g, input)?;
    let grads = g.backward(loss)?;
    let analytic = match grads.get(input) {
        Some(t) => t.clone(),
        None => Tensor::zeros(x.shape())?,
    };

    let eval = |t: Tensor<f64>| -> Result<f64> {
        let mut g = Graph::new();
        let n = g.constant(t);
        let l = f(&mut g, n)?;
        g.value(l)
            .item()
            .ok_or_else(|| Error::NonScalarLoss(g.value(l).shape().to_vec()))
    };

    let mut worst = 0f64;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += step;
        let mut minus = x.clone();
        minus.data_mut()[i] -= step;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * step);
        worst = worst.max(relative_error(analytic.data()[i], numeric));
    }
    Ok(worst)
}
