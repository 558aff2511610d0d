#![allow(dead_code)]

use ietnet::layers::ParamStore;
use ietnet::tensor::{relative_error, Graph, NodeId, Tensor};
use ietnet::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Largest relative error between tape and central-difference gradients
/// over every scalar of every parameter in `store`.
pub fn param_grad_error<F>(store: &ParamStore<f64>, f: F, step: f64) -> f64
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let loss = f(&mut g, store).unwrap();
    let grads = g.backward(loss).unwrap();
    let eval = |s: &ParamStore<f64>| {
        let mut g = Graph::new();
        let l = f(&mut g, s).unwrap();
        g.value(l).item().unwrap()
    };
    let mut worst = 0f64;
    let mut probe = store.clone();
    for id in store.ids() {
        let analytic = grads.param(id).cloned().unwrap_or_else(|| Tensor::zeros(store.get(id).shape()).unwrap());
        for i in 0..store.get(id).numel() {
            let orig = store.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + step;
            let plus = eval(&probe);
            probe.get_mut(id).data_mut()[i] = orig - step;
            let minus = eval(&probe);
            probe.get_mut(id).data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(analytic.data()[i], numeric));
        }
    }
    worst
}

/// Direct evaluation of the causal dilated convolution definition.
pub fn naive_conv(x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>, d: usize) -> Tensor<f64> {
    let (n, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (f, kk) = (k.shape()[0], k.shape()[2]);
    let mut out = vec![0.0; n * f * t];
    for bi in 0..n {
        for fi in 0..f {
            for ti in 0..t {
                let mut acc = b.data()[fi];
                for ci in 0..c {
                    for j in 0..kk {
                        let back = (kk - 1 - j) * d;
                        if ti >= back {
                            acc += k.get(&[fi, ci, j]).unwrap() * x.get(&[bi, ci, ti - back]).unwrap();
                        }
                    }
                }
                out[(bi * f + fi) * t + ti] = acc;
            }
        }
    }
    Tensor::new(vec![n, f, t], out).unwrap()
}
