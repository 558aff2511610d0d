use rand::Rng;

use super::Mode;
use crate::error::{Error, Result};
use crate::tensor::{Graph, NodeId, Scalar, Tensor};

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} not in [0, 1)")));
    }
    Ok(())
}

fn mask<S: Scalar, R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Result<Tensor<S>> {
    let keep = S::from_f64_lossy(1.0 / (1.0 - rate));
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < rate {
                    S::zero()
                } else {
                    keep
                }
            })
            .collect(),
    )
}

/// Inverted dropout on a plain tensor. Identity when not training.
pub fn dropout_apply<S: Scalar, R: Rng + ?Sized>(
    x: &Tensor<S>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<Tensor<S>> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let m = mask::<S, R>(x.shape(), rate, rng)?;
    let data = x.data().iter().zip(m.data()).map(|(&a, &b)| a * b).collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Inverted dropout on the tape: multiplies by a constant mask node.
pub fn dropout<S: Scalar>(g: &mut Graph<S>, x: NodeId, rate: f64, mode: &mut Mode<'_>) -> Result<NodeId> {
    check_rate(rate)?;
    match mode {
        Mode::Training(rng) if rate > 0.0 => {
            let m = mask::<S, _>(g.shape(x), rate, &mut **rng)?;
            let m = g.constant(m);
            g.mul(x, m)
        }
        _ => Ok(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Tensor::<f32>::from_f64(&[3], &[1., 2., 3.]).unwrap();
        assert_eq!(dropout_apply(&x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(dropout_apply(&x, 0.9, false, &mut rng).unwrap(), x);
        assert!(dropout_apply(&x, 1.0, true, &mut rng).is_err());
    }

    #[test]
    fn half_rate_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Tensor::<f64>::ones(&[1_000_000]).unwrap();
        let y = dropout_apply(&x, 0.5, true, &mut rng).unwrap();
        let n = y.numel() as f64;
        let mean = y.sum() / n;
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / n;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        assert!((zeros - 0.5).abs() < 0.01, "{zeros}");
    }

    #[test]
    fn inference_mode_adds_no_nodes() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::ones(&[4]).unwrap());
        let y = dropout(&mut g, x, 0.5, &mut Mode::Inference).unwrap();
        assert_eq!(x, y);
        assert_eq!(g.len(), 1);
    }
}
