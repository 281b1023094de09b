use rand::Rng;

use super::{expect_shape, fan_in_uniform, LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::tensor::Tensor;

/// Affine map `y = W x + b` with `W` stored `[n_out, n_in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(n_in: usize, n_out: usize, weight: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weight.len(), n_in * n_out);
        assert_eq!(bias.len(), n_out);
        Self { n_in, n_out, weight, bias, cache: None }
    }

    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let weight = fan_in_uniform(rng, n_in, n_in * n_out);
        Self::new(n_in, n_out, weight, vec![0.0; n_out])
    }
}

impl Module for Dense {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Dense { n_in: self.n_in, n_out: self.n_out }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input != [self.n_in] {
            return Err(NnError::InputShape {
                layer: "dense",
                expected: format!("[batch, {}]", self.n_in),
                got: input.to_vec(),
            });
        }
        Ok(vec![self.n_out])
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        expect_shape("dense", x, &[self.n_in])?;
        let batch = x.batch();
        let mut out = vec![0.0; batch * self.n_out];
        for b in 0..batch {
            let row = x.sample(b);
            for o in 0..self.n_out {
                let w = &self.weight[o * self.n_in..(o + 1) * self.n_in];
                out[b * self.n_out + o] =
                    self.bias[o] + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>();
            }
        }
        self.cache = Some(x.clone());
        Ok(Tensor::matrix(batch, self.n_out, out)?)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let x = self.cache.as_ref().ok_or(NnError::NoCache("dense"))?;
        expect_shape("dense", d_out, &[self.n_out])?;
        let batch = x.batch();
        let mut d_w = vec![0.0; self.weight.len()];
        let mut d_b = vec![0.0; self.n_out];
        let mut d_x = vec![0.0; batch * self.n_in];
        for b in 0..batch {
            let row = x.sample(b);
            let g = d_out.sample(b);
            let dx_row = &mut d_x[b * self.n_in..(b + 1) * self.n_in];
            for o in 0..self.n_out {
                let go = g[o];
                d_b[o] += go;
                let w = &self.weight[o * self.n_in..(o + 1) * self.n_in];
                let dw = &mut d_w[o * self.n_in..(o + 1) * self.n_in];
                for i in 0..self.n_in {
                    dw[i] += go * row[i];
                    dx_row[i] += go * w[i];
                }
            }
        }
        Ok(LayerGradients {
            params: vec![d_w, d_b],
            input: Tensor::matrix(batch, self.n_in, d_x)?,
        })
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["weight", "bias"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weight, &mut self.bias]
    }
}
