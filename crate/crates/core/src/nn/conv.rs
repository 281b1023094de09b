use rand::Rng;

use super::{fan_in_uniform, join, LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::tensor::Tensor;

/// 2-D cross-correlation over `[batch, channels, height, width]` inputs.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out_channels, in_channels, kernel, kernel]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    cache: Option<Tensor>,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Self {
        assert!(kernel > 0 && stride > 0);
        assert_eq!(weight.len(), out_channels * in_channels * kernel * kernel);
        assert_eq!(bias.len(), out_channels);
        Self { in_channels, out_channels, kernel, stride, padding, weight, bias, cache: None }
    }

    pub fn init<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        let weight = fan_in_uniform(rng, fan_in, out_channels * fan_in);
        Self::new(in_channels, out_channels, kernel, stride, padding, weight, vec![0.0; out_channels])
    }

    fn out_dim(&self, size: usize) -> Option<usize> {
        let padded = size + 2 * self.padding;
        (padded >= self.kernel).then(|| (padded - self.kernel) / self.stride + 1)
    }

    fn dims(&self, sample: &[usize]) -> Result<(usize, usize, usize, usize)> {
        let bad = || NnError::InputShape {
            layer: "conv2d",
            expected: format!("[batch, {}, H, W]", self.in_channels),
            got: sample.to_vec(),
        };
        if sample.len() != 3 || sample[0] != self.in_channels {
            return Err(bad());
        }
        let (h, w) = (sample[1], sample[2]);
        let oh = self.out_dim(h).ok_or_else(bad)?;
        let ow = self.out_dim(w).ok_or_else(bad)?;
        Ok((h, w, oh, ow))
    }

    #[inline]
    fn w_index(&self, o: usize, c: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + c) * self.kernel + ky) * self.kernel + kx
    }
}

/// Output columns `ox` whose input column `ox·st + kx − pad` lies in `[0, w)`.
fn valid_range(kx: isize, st: isize, pad: isize, w: usize, ow: usize) -> (usize, usize) {
    let lo = (pad - kx).max(0);
    let lo = (lo + st - 1) / st;
    let hi = (w as isize - 1 + pad - kx).div_euclid(st) + 1;
    let hi = hi.clamp(0, ow as isize) as usize;
    let lo = (lo as usize).min(hi);
    (lo, hi)
}

impl Module for Conv2d {
    fn name(&self) -> &'static str {
        "conv2d"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Conv2d {
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            kernel: self.kernel,
            stride: self.stride,
            padding: self.padding,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let (_, _, oh, ow) = self.dims(input)?;
        Ok(vec![self.out_channels, oh, ow])
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        if x.shape().len() != 4 {
            return Err(NnError::InputShape {
                layer: "conv2d",
                expected: format!("[batch, {}, H, W]", self.in_channels),
                got: x.shape().to_vec(),
            });
        }
        let (h, w, oh, ow) = self.dims(x.sample_shape())?;
        let batch = x.batch();
        let (k, st, pad) = (self.kernel as isize, self.stride as isize, self.padding as isize);
        let mut out = vec![0.0; batch * self.out_channels * oh * ow];
        let xd = x.data();
        for b in 0..batch {
            for o in 0..self.out_channels {
                let plane = &mut out[(b * self.out_channels + o) * oh * ow..][..oh * ow];
                plane.fill(self.bias[o]);
                for c in 0..self.in_channels {
                    let src = &xd[(b * self.in_channels + c) * h * w..][..h * w];
                    for ky in 0..k {
                        for kx in 0..k {
                            let wv = self.weight[self.w_index(o, c, ky as usize, kx as usize)];
                            for oy in 0..oh as isize {
                                let iy = oy * st + ky - pad;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let src_row = &src[iy as usize * w..][..w];
                                let dst_row = &mut plane[oy as usize * ow..][..ow];
                                let (lo, hi) = valid_range(kx, st, pad, w, ow);
                                if st == 1 {
                                    let shift = (lo as isize + kx - pad) as usize;
                                    let src = &src_row[shift..shift + hi - lo];
                                    for (d, &v) in dst_row[lo..hi].iter_mut().zip(src) {
                                        *d += wv * v;
                                    }
                                } else {
                                    for ox in lo..hi {
                                        dst_row[ox] += wv * src_row[(ox as isize * st + kx - pad) as usize];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.cache = Some(x.clone());
        Ok(Tensor::new(vec![batch, self.out_channels, oh, ow], out)?)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let x = self.cache.as_ref().ok_or(NnError::NoCache("conv2d"))?;
        let (h, w, oh, ow) = self.dims(x.sample_shape())?;
        let batch = x.batch();
        if d_out.shape() != [batch, self.out_channels, oh, ow] {
            return Err(NnError::InputShape {
                layer: "conv2d",
                expected: format!("[{}]", join(&[batch, self.out_channels, oh, ow])),
                got: d_out.shape().to_vec(),
            });
        }
        let (k, st, pad) = (self.kernel as isize, self.stride as isize, self.padding as isize);
        let mut d_w = vec![0.0; self.weight.len()];
        let mut d_b = vec![0.0; self.out_channels];
        let mut d_x = vec![0.0; x.len()];
        let xd = x.data();
        let gd = d_out.data();
        for b in 0..batch {
            for o in 0..self.out_channels {
                let g_plane = &gd[(b * self.out_channels + o) * oh * ow..][..oh * ow];
                d_b[o] += g_plane.iter().sum::<f64>();
                for c in 0..self.in_channels {
                    let base = (b * self.in_channels + c) * h * w;
                    let src = &xd[base..base + h * w];
                    for ky in 0..k {
                        for kx in 0..k {
                            let wi = self.w_index(o, c, ky as usize, kx as usize);
                            let wv = self.weight[wi];
                            let mut acc = 0.0;
                            for oy in 0..oh as isize {
                                let iy = oy * st + ky - pad;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let row_off = iy as usize * w;
                                let g_row = &g_plane[oy as usize * ow..][..ow];
                                let (lo, hi) = valid_range(kx, st, pad, w, ow);
                                if st == 1 {
                                    let start = row_off + (lo as isize + kx - pad) as usize;
                                    let g_row = &g_row[lo..hi];
                                    let src_row = &src[start..start + g_row.len()];
                                    acc += g_row.iter().zip(src_row).map(|(g, v)| g * v).sum::<f64>();
                                    let dx_row = &mut d_x[base + start..base + start + g_row.len()];
                                    for (d, &g) in dx_row.iter_mut().zip(g_row) {
                                        *d += g * wv;
                                    }
                                } else {
                                    for ox in lo..hi {
                                        let idx = row_off + (ox as isize * st + kx - pad) as usize;
                                        acc += g_row[ox] * src[idx];
                                        d_x[base + idx] += g_row[ox] * wv;
                                    }
                                }
                            }
                            d_w[wi] += acc;
                        }
                    }
                }
            }
        }
        Ok(LayerGradients { params: vec![d_w, d_b], input: Tensor::new(x.shape().to_vec(), d_x)? })
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
