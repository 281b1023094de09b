//! Layer framework with explicit forward/backward passes.
//!
//! Every layer implements [`Module`]. `forward` caches whatever `backward`
//! needs inside the layer; `backward` returns parameter gradients in the
//! same order as [`Module::params`] plus the gradient with respect to the
//! layer input. Tensors carry the batch on their first axis; image tensors
//! are `[batch, channels, height, width]`.

mod batchnorm;
pub mod checkpoint;
mod conv;
mod dense;
mod elementwise;
mod lau;
mod loss;
mod network;
mod pool;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lehmer::LehmerError;
use crate::tensor::{ShapeError, Tensor};

pub use batchnorm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use conv::Conv2d;
pub use dense::Dense;
pub use elementwise::{Flatten, Relu, Squash};
pub use lau::{LauLayerComplex, LauLayerReal, INIT_SUDDENCY};
pub use loss::{argmax, softmax_cross_entropy};
pub use network::{flatten_grads, LauKind, Network};
pub use pool::MaxPool2d;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("{layer}: expected input of shape {expected}, got {got:?}")]
    InputShape { layer: &'static str, expected: String, got: Vec<usize> },
    #[error("layer {index} ({layer}): {reason}")]
    Chain { index: usize, layer: &'static str, reason: String },
    #[error("{0}: backward called before forward")]
    NoCache(&'static str),
    #[error("label {label} at row {row} is outside [0, {classes})")]
    Label { row: usize, label: usize, classes: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Domain(#[from] LehmerError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

/// Parameter gradients (declaration order) and the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub params: Vec<Vec<f64>>,
    pub input: Tensor,
}

/// Serializable description of one layer, used for construction and in
/// checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { n_in: usize, n_out: usize },
    LauReal { n_in: usize, units: usize },
    LauComplex { n_in: usize, units: usize },
    Conv2d { in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize },
    BatchNorm2d { channels: usize },
    MaxPool2d { window: usize, stride: usize },
    Relu,
    Flatten,
    Squash,
}

impl LayerSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Box<dyn Module> {
        match *self {
            LayerSpec::Dense { n_in, n_out } => Box::new(Dense::init(n_in, n_out, rng)),
            LayerSpec::LauReal { n_in, units } => Box::new(LauLayerReal::new(n_in, units)),
            LayerSpec::LauComplex { n_in, units } => Box::new(LauLayerComplex::new(n_in, units)),
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
                Box::new(Conv2d::init(in_channels, out_channels, kernel, stride, padding, rng))
            }
            LayerSpec::BatchNorm2d { channels } => Box::new(BatchNorm2d::new(channels)),
            LayerSpec::MaxPool2d { window, stride } => Box::new(MaxPool2d::new(window, stride)),
            LayerSpec::Relu => Box::new(Relu::default()),
            LayerSpec::Flatten => Box::new(Flatten::default()),
            LayerSpec::Squash => Box::new(Squash::default()),
        }
    }

    pub fn is_lau(&self) -> bool {
        matches!(self, LayerSpec::LauReal { .. } | LayerSpec::LauComplex { .. })
    }
}

pub trait Module: std::fmt::Debug + Send {
    fn name(&self) -> &'static str;

    fn spec(&self) -> LayerSpec;

    /// Per-sample output shape for a per-sample input shape.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>>;

    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor>;

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients>;

    fn param_names(&self) -> &'static [&'static str] {
        &[]
    }

    fn params(&self) -> Vec<&[f64]> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        Vec::new()
    }

    /// Non-trainable state that belongs in a checkpoint.
    fn buffers(&self) -> Vec<&[f64]> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        Vec::new()
    }

    /// Number of near-singular complex denominators met in the last forward pass.
    fn near_singular_count(&self) -> usize {
        0
    }
}

pub(crate) fn expect_shape(
    layer: &'static str,
    x: &Tensor,
    sample: &[usize],
) -> Result<()> {
    if x.shape().len() != sample.len() + 1 || x.sample_shape() != sample {
        return Err(NnError::InputShape {
            layer,
            expected: format!("[batch, {}]", join(sample)),
            got: x.shape().to_vec(),
        });
    }
    Ok(())
}

pub(crate) fn join(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
}

/// Fan-in scaled uniform initializer `U(−√(6/fan_in), √(6/fan_in))`.
pub(crate) fn fan_in_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}
