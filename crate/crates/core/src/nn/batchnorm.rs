use super::{LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalization over `[batch, channels, H, W]`.
///
/// Training mode normalizes with the batch statistics and folds them into
/// the running estimates; inference mode uses the running estimates only.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub channels: usize,
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    shape: Vec<usize>,
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
}

impl BatchNorm2d {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            scale: vec![1.0; channels],
            shift: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            cache: None,
        }
    }

    fn check(&self, shape: &[usize]) -> Result<()> {
        if shape.len() != 4 || shape[1] != self.channels {
            return Err(NnError::InputShape {
                layer: "batchnorm2d",
                expected: format!("[batch, {}, H, W]", self.channels),
                got: shape.to_vec(),
            });
        }
        Ok(())
    }
}

impl Module for BatchNorm2d {
    fn name(&self) -> &'static str {
        "batchnorm2d"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::BatchNorm2d { channels: self.channels }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        if input.len() != 3 || input[0] != self.channels {
            return Err(NnError::InputShape {
                layer: "batchnorm2d",
                expected: format!("[batch, {}, H, W]", self.channels),
                got: input.to_vec(),
            });
        }
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        self.check(x.shape())?;
        let (batch, ch) = (x.batch(), self.channels);
        let plane = x.shape()[2] * x.shape()[3];
        let count = (batch * plane) as f64;
        let xd = x.data();
        let mut inv_std = vec![0.0; ch];
        let mut mean = vec![0.0; ch];
        match mode {
            Mode::Train => {
                for c in 0..ch {
                    let mut sum = 0.0;
                    for b in 0..batch {
                        sum += xd[(b * ch + c) * plane..][..plane].iter().sum::<f64>();
                    }
                    let mu = sum / count;
                    let mut sq = 0.0;
                    for b in 0..batch {
                        sq += xd[(b * ch + c) * plane..][..plane]
                            .iter()
                            .map(|v| (v - mu) * (v - mu))
                            .sum::<f64>();
                    }
                    let var = sq / count;
                    mean[c] = mu;
                    inv_std[c] = 1.0 / (var + BN_EPS).sqrt();
                    let unbiased = if count > 1.0 { sq / (count - 1.0) } else { var };
                    self.running_mean[c] = BN_MOMENTUM * self.running_mean[c] + (1.0 - BN_MOMENTUM) * mu;
                    self.running_var[c] =
                        BN_MOMENTUM * self.running_var[c] + (1.0 - BN_MOMENTUM) * unbiased;
                }
            }
            Mode::Inference => {
                for c in 0..ch {
                    mean[c] = self.running_mean[c];
                    inv_std[c] = 1.0 / (self.running_var[c].max(0.0) + BN_EPS).sqrt();
                }
            }
        }
        let mut normalized = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * plane;
                for i in off..off + plane {
                    let n = (xd[i] - mean[c]) * inv_std[c];
                    normalized[i] = n;
                    out[i] = self.scale[c] * n + self.shift[c];
                }
            }
        }
        self.cache = Some(Cache { shape: x.shape().to_vec(), normalized, inv_std, mode });
        Ok(Tensor::new(x.shape().to_vec(), out)?)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let cache = self.cache.as_ref().ok_or(NnError::NoCache("batchnorm2d"))?;
        if d_out.shape() != cache.shape.as_slice() {
            return Err(NnError::InputShape {
                layer: "batchnorm2d",
                expected: format!("{:?}", cache.shape),
                got: d_out.shape().to_vec(),
            });
        }
        let (batch, ch) = (cache.shape[0], self.channels);
        let plane = cache.shape[2] * cache.shape[3];
        let count = (batch * plane) as f64;
        let g = d_out.data();
        let xn = &cache.normalized;
        let mut d_scale = vec![0.0; ch];
        let mut d_shift = vec![0.0; ch];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * plane;
                for i in off..off + plane {
                    d_shift[c] += g[i];
                    d_scale[c] += g[i] * xn[i];
                }
            }
        }
        let mut d_x = vec![0.0; g.len()];
        for b in 0..batch {
            for c in 0..ch {
                let off = (b * ch + c) * plane;
                let k = self.scale[c] * cache.inv_std[c];
                for i in off..off + plane {
                    d_x[i] = match cache.mode {
                        Mode::Train => k * (g[i] - d_shift[c] / count - xn[i] * d_scale[c] / count),
                        Mode::Inference => k * g[i],
                    };
                }
            }
        }
        Ok(LayerGradients {
            params: vec![d_scale, d_shift],
            input: Tensor::new(cache.shape.clone(), d_x)?,
        })
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["scale", "shift"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![&self.scale, &self.shift]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.scale, &mut self.shift]
    }

    fn buffers(&self) -> Vec<&[f64]> {
        vec![&self.running_mean, &self.running_var]
    }

    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.running_mean, &mut self.running_var]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::testing::check_layer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::new(vec![3, 2, 2, 3], (0..36).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn train_output_is_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut bn = BatchNorm2d::new(2);
        let y = bn.forward(&random_input(&mut rng), Mode::Train).unwrap();
        for c in 0..2 {
            let vals: Vec<f64> =
                (0..3).flat_map(|b| y.data()[(b * 2 + c) * 6..][..6].to_vec()).collect();
            let mean = vals.iter().sum::<f64>() / 18.0;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 18.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
        assert!(bn.running_var.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn inference_uses_running_statistics() {
        let mut bn = BatchNorm2d::new(1);
        bn.running_mean = vec![2.0];
        bn.running_var = vec![4.0 - BN_EPS];
        bn.scale = vec![3.0];
        bn.shift = vec![1.0];
        let x = Tensor::new(vec![1, 1, 1, 2], vec![2.0, 6.0]).unwrap();
        let y = bn.forward(&x, Mode::Inference).unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!((y.data()[1] - 7.0).abs() < 1e-12);
        assert_eq!(bn.running_mean, vec![2.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for mode in [Mode::Train, Mode::Inference] {
            let mut bn = BatchNorm2d::new(2);
            bn.scale = vec![1.3, -0.7];
            bn.shift = vec![0.2, 0.5];
            bn.running_mean = vec![0.1, -0.2];
            bn.running_var = vec![0.8, 1.5];
            let x = random_input(&mut rng);
            let probe: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
            let worst = check_layer(&mut bn, &x, &probe, mode, 1e-5);
            assert!(worst < 1e-4, "{mode:?}: {worst}");
        }
    }
}
