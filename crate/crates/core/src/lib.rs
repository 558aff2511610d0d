//! Multivariate time-series classification with per-instance channel
//! explanations.
//!
//! A shared temporal convolutional network summarizes every channel, a
//! channel-attention block turns the summaries into a *channel gate* — for
//! each class, a probability distribution over input channels — and the
//! gated summaries are pooled into class scores. The gate is both part of
//! the classifier and its explanation.
//!
//! ```
//! use ietnet::model::{IetNet, IetNetConfig};
//! use ietnet::tensor::Tensor;
//!
//! let config = IetNetConfig {
//!     n_channels: 3,
//!     seq_len: 16,
//!     dilations: vec![1, 2],
//!     tcn_filters: 4,
//!     d_model: 4,
//!     ..Default::default()
//! };
//! let net = IetNet::<f32>::new(config, 7).unwrap();
//! let x = Tensor::<f32>::zeros(&[2, 3, 16]).unwrap();
//! let pred = net.predict(&x, 8).unwrap();
//! assert_eq!(pred.gate.shape(), &[2, 3, 2]);
//! ```
//!
//! Modules, bottom up: [`tensor`] (tensors and reverse-mode autodiff),
//! [`layers`], [`model`], [`train`], [`data`] (including the N-body
//! benchmark), and [`eval`].

pub mod data;
pub mod error;
pub mod eval;
pub mod layers;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

// Keeps the guide's code samples compiling and passing as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/autodiff.md")]
    mod autodiff {}
    #[doc = include_str!("../../../book/src/architecture.md")]
    mod architecture {}
    #[doc = include_str!("../../../book/src/nbody.md")]
    mod nbody {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/data-formats.md")]
    mod data_formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
