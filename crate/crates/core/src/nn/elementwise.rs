use super::{LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::lehmer::{squash_derivative, squash_to_lehmer_range};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Default)]
pub struct Relu {
    cache: Option<Tensor>,
}

impl Module for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Relu
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        self.cache = Some(x.clone());
        Ok(x.map(|v| v.max(0.0)))
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let x = self.cache.as_ref().ok_or(NnError::NoCache("relu"))?;
        let data = x
            .data()
            .iter()
            .zip(d_out.data())
            .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
            .collect();
        Ok(LayerGradients { params: Vec::new(), input: Tensor::new(x.shape().to_vec(), data)? })
    }
}

/// Collapses all non-batch axes.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Module for Flatten {
    fn name(&self) -> &'static str {
        "flatten"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Flatten
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(vec![input.iter().product()])
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        self.input_shape = Some(x.shape().to_vec());
        Ok(x.clone().reshape(vec![x.batch(), x.sample_len()])?)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let shape = self.input_shape.clone().ok_or(NnError::NoCache("flatten"))?;
        Ok(LayerGradients { params: Vec::new(), input: d_out.clone().reshape(shape)? })
    }
}

/// Elementwise `exp(tanh z)`, turning unbounded activations into valid
/// LAU inputs inside `(e⁻¹, e)`.
#[derive(Debug, Clone, Default)]
pub struct Squash {
    cache: Option<Tensor>,
}

impl Module for Squash {
    fn name(&self) -> &'static str {
        "squash"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Squash
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        self.cache = Some(x.clone());
        Ok(x.map(squash_to_lehmer_range))
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let x = self.cache.as_ref().ok_or(NnError::NoCache("squash"))?;
        let data =
            x.data().iter().zip(d_out.data()).map(|(&z, &g)| g * squash_derivative(z)).collect();
        Ok(LayerGradients { params: Vec::new(), input: Tensor::new(x.shape().to_vec(), data)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testing::check_layer;

    #[test]
    fn squash_gradient() {
        let mut sq = Squash::default();
        let x = Tensor::matrix(2, 3, vec![-3.0, -0.5, 0.0, 0.25, 1.0, 4.0]).unwrap();
        let probe = [0.3, -1.0, 0.7, 1.1, -0.2, 0.9];
        assert!(check_layer(&mut sq, &x, &probe, Mode::Train, 1e-5) < 1e-5);
        let y = sq.forward(&x, Mode::Train).unwrap();
        assert!(y.data().iter().all(|&v| v > (-1f64).exp() && v < 1f64.exp()));
    }

    #[test]
    fn relu_and_flatten() {
        let mut relu = Relu::default();
        let x = Tensor::new(vec![1, 2, 1, 2], vec![-1.0, 2.0, 0.5, -3.0]).unwrap();
        assert_eq!(relu.forward(&x, Mode::Train).unwrap().data(), &[0.0, 2.0, 0.5, 0.0]);
        let g = relu.backward(&Tensor::new(vec![1, 2, 1, 2], vec![1.0; 4]).unwrap()).unwrap();
        assert_eq!(g.input.data(), &[0.0, 1.0, 1.0, 0.0]);

        let mut flat = Flatten::default();
        let y = flat.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.shape(), &[1, 4]);
        assert_eq!(flat.backward(&y).unwrap().input.shape(), &[1, 2, 1, 2]);
    }
}
