use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::argmax;
use super::{LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::tensor::Tensor;

/// Which LAU variant a network uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LauKind {
    Real,
    Complex,
}

impl LauKind {
    pub fn layer(self, n_in: usize, units: usize) -> LayerSpec {
        match self {
            LauKind::Real => LayerSpec::LauReal { n_in, units },
            LauKind::Complex => LayerSpec::LauComplex { n_in, units },
        }
    }
}

impl fmt::Display for LauKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LauKind::Real => "real",
            LauKind::Complex => "complex",
        })
    }
}

impl FromStr for LauKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "real" => Ok(LauKind::Real),
            "complex" => Ok(LauKind::Complex),
            other => Err(format!("unknown LAU kind {other:?}, expected real or complex")),
        }
    }
}

/// A feed-forward stack of layers ending in logits.
#[derive(Debug)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Box<dyn Module>>,
}

impl Network {
    /// Builds and initializes a network from layer descriptions. All random
    /// initialization is drawn from one ChaCha8 stream seeded with `seed`,
    /// in layer order.
    pub fn new(input_shape: Vec<usize>, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs.iter().map(|s| s.build(&mut rng)).collect();
        Self::from_layers(input_shape, layers)
    }

    /// Validates the shape chain and the LAU input rule: a LAU layer must be
    /// the first layer (inputs standardized by the caller) or follow a
    /// squash or real LAU layer, whose outputs are already positive and bounded.
    pub fn from_layers(input_shape: Vec<usize>, layers: Vec<Box<dyn Module>>) -> Result<Self> {
        let mut shape = input_shape.clone();
        for (index, layer) in layers.iter().enumerate() {
            if layer.spec().is_lau() && index > 0 {
                let prev = layers[index - 1].spec();
                if !matches!(prev, LayerSpec::Squash | LayerSpec::LauReal { .. }) {
                    return Err(NnError::Chain {
                        index,
                        layer: layer.name(),
                        reason: format!(
                            "fed by unbounded {} activations, insert a squash layer",
                            layers[index - 1].name()
                        ),
                    });
                }
            }
            shape = layer.output_shape(&shape).map_err(|e| NnError::Chain {
                index,
                layer: layer.name(),
                reason: e.to_string(),
            })?;
        }
        if shape.len() != 1 {
            return Err(NnError::Chain {
                index: layers.len(),
                layer: "output",
                reason: format!("network must end in [batch, classes], got {shape:?}"),
            });
        }
        Ok(Self { input_shape, layers })
    }

    /// LAU layer of `units` units on standardized features, then an affine
    /// map to class logits.
    pub fn tabular(n_features: usize, n_classes: usize, kind: LauKind, units: usize, seed: u64) -> Result<Self> {
        Self::new(
            vec![n_features],
            &[kind.layer(n_features, units), LayerSpec::Dense { n_in: units, n_out: n_classes }],
            seed,
        )
    }

    /// Two conv/batchnorm/relu/pool blocks on `[1, 28, 28]` images, flattened,
    /// squashed into the LAU range and fed to the LAU head.
    pub fn mnist(kind: LauKind, units: usize, seed: u64) -> Result<Self> {
        let specs = [
            LayerSpec::Conv2d { in_channels: 1, out_channels: 8, kernel: 3, stride: 1, padding: 1 },
            LayerSpec::BatchNorm2d { channels: 8 },
            LayerSpec::Relu,
            LayerSpec::MaxPool2d { window: 2, stride: 2 },
            LayerSpec::Conv2d { in_channels: 8, out_channels: 16, kernel: 3, stride: 1, padding: 1 },
            LayerSpec::BatchNorm2d { channels: 16 },
            LayerSpec::Relu,
            LayerSpec::MaxPool2d { window: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Squash,
            kind.layer(16 * 7 * 7, units),
            LayerSpec::Dense { n_in: units, n_out: 10 },
        ];
        Self::new(vec![1, 28, 28], &specs, seed)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec()).collect()
    }

    pub fn layers(&self) -> &[Box<dyn Module>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Box<dyn Module>] {
        &mut self.layers
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        if x.shape().len() != self.input_shape.len() + 1 || x.sample_shape() != self.input_shape {
            return Err(NnError::InputShape {
                layer: "network",
                expected: format!("[batch, {}]", super::join(&self.input_shape)),
                got: x.shape().to_vec(),
            });
        }
        let mut h = self.layers[0].forward(x, mode)?;
        for layer in &mut self.layers[1..] {
            h = layer.forward(&h, mode)?;
        }
        Ok(h)
    }

    /// Back-propagates `d_logits` through the cached forward pass. Gradients
    /// come back in layer order.
    pub fn backward(&self, d_logits: &Tensor) -> Result<Vec<LayerGradients>> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_logits.clone();
        for layer in self.layers.iter().rev() {
            let g = layer.backward(&upstream)?;
            upstream = g.input.clone();
            grads.push(g);
        }
        grads.reverse();
        Ok(grads)
    }

    /// All trainable arrays, layer by layer in declaration order.
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    /// `"<layer index>.<layer>.<param>"` for each entry of [`Self::params`].
    pub fn param_labels(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.param_names().iter().map(move |p| format!("{i}.{}.{p}", l.name())))
            .collect()
    }

    pub fn buffers(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.buffers()).collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.buffers_mut()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn near_singular_count(&self) -> usize {
        self.layers.iter().map(|l| l.near_singular_count()).sum()
    }

    /// Inference-mode class predictions, ties to the lowest class index.
    pub fn predict(&mut self, x: &Tensor) -> Result<Vec<usize>> {
        let logits = self.forward(x, Mode::Inference)?;
        Ok((0..logits.batch()).map(|b| argmax(logits.sample(b))).collect())
    }
}

/// Flattens per-layer gradients in the order of [`Network::params`].
pub fn flatten_grads(grads: &[LayerGradients]) -> Vec<&[f64]> {
    grads.iter().flat_map(|g| g.params.iter().map(|p| p.as_slice())).collect()
}
