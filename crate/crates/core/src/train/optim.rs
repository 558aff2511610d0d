use crate::error::{Error, Result};
use crate::layers::ParamStore;
use crate::tensor::{Scalar, Tensor};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moments for every parameter of a store, in store order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m: Vec<Tensor<S>>,
    pub v: Vec<Tensor<S>>,
    /// Updates applied so far.
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(store: &ParamStore<S>) -> Result<Self> {
        let zeros = || {
            store
                .iter()
                .map(|(_, _, t)| Tensor::zeros(t.shape()))
                .collect::<Result<Vec<_>>>()
        };
        Ok(AdamState {
            m: zeros()?,
            v: zeros()?,
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        })
    }
}

/// One bias-corrected Adam update. `grads` is aligned with the store's ids.
/// Nothing is modified if any gradient is non-finite or mis-shaped.
pub fn adam_step<S: Scalar>(
    store: &mut ParamStore<S>,
    grads: &[Tensor<S>],
    state: &mut AdamState<S>,
    lr: f64,
) -> Result<()> {
    if grads.len() != store.len() || state.m.len() != store.len() {
        return Err(Error::Config(format!(
            "{} gradients and {} moment tensors for {} parameters",
            grads.len(),
            state.m.len(),
            store.len()
        )));
    }
    for (id, name, p) in store.iter() {
        let g = &grads[id.index()];
        if g.shape() != p.shape() || state.m[id.index()].shape() != p.shape() {
            return Err(Error::Dimension {
                op: "adam_step",
                lhs: p.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let conv = S::from_f64_lossy;
    let (b1, b2, eps) = (conv(state.beta1), conv(state.beta2), conv(state.eps));
    let (one_m_b1, one_m_b2) = (conv(1.0 - state.beta1), conv(1.0 - state.beta2));
    let (c1, c2, lr) = (conv(c1), conv(c2), conv(lr));
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let i = id.index();
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = store.get_mut(id).data_mut();
        for j in 0..p.len() {
            m[j] = b1 * m[j] + one_m_b1 * g[j];
            v[j] = b2 * v[j] + one_m_b2 * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
