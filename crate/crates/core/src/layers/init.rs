use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Zero-mean normal samples with standard deviation `sqrt(2 / (fan_in + fan_out))`.
pub fn glorot_normal_init<S: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Result<Tensor<S>> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::Config("glorot init needs positive fans".into()));
    }
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| S::from_f64_lossy(normal.sample(rng))).collect(),
    )
}
