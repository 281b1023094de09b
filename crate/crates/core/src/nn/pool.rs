use super::{LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::tensor::Tensor;

/// Max pooling without padding. Ties resolve to the first element in
/// row-major window order, and backward routes the whole gradient there.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub window: usize,
    pub stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(window: usize, stride: usize) -> Self {
        assert!(window > 0 && stride > 0);
        Self { window, stride, cache: None }
    }

    fn out_dims(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        (h >= self.window && w >= self.window)
            .then(|| ((h - self.window) / self.stride + 1, (w - self.window) / self.stride + 1))
    }
}

impl Module for MaxPool2d {
    fn name(&self) -> &'static str {
        "maxpool2d"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::MaxPool2d { window: self.window, stride: self.stride }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let bad = || NnError::InputShape {
            layer: "maxpool2d",
            expected: format!("[batch, C, H >= {0}, W >= {0}]", self.window),
            got: input.to_vec(),
        };
        if input.len() != 3 {
            return Err(bad());
        }
        let (oh, ow) = self.out_dims(input[1], input[2]).ok_or_else(bad)?;
        Ok(vec![input[0], oh, ow])
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        if x.shape().len() != 4 {
            return Err(NnError::InputShape {
                layer: "maxpool2d",
                expected: "[batch, C, H, W]".into(),
                got: x.shape().to_vec(),
            });
        }
        let out_sample = self.output_shape(x.sample_shape())?;
        let (batch, ch, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (oh, ow) = (out_sample[1], out_sample[2]);
        let xd = x.data();
        let mut out = Vec::with_capacity(batch * ch * oh * ow);
        let mut argmax = Vec::with_capacity(batch * ch * oh * ow);
        for bc in 0..batch * ch {
            let base = bc * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * self.stride * w + ox * self.stride;
                    for ky in 0..self.window {
                        for kx in 0..self.window {
                            let idx = base + (oy * self.stride + ky) * w + ox * self.stride + kx;
                            if xd[idx] > xd[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(xd[best]);
                    argmax.push(best);
                }
            }
        }
        self.cache = Some((x.shape().to_vec(), argmax));
        Ok(Tensor::new(vec![batch, ch, oh, ow], out)?)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let (shape, argmax) = self.cache.as_ref().ok_or(NnError::NoCache("maxpool2d"))?;
        if d_out.len() != argmax.len() {
            return Err(NnError::InputShape {
                layer: "maxpool2d",
                expected: format!("{} gradient elements", argmax.len()),
                got: d_out.shape().to_vec(),
            });
        }
        let mut d_x = vec![0.0; shape.iter().product()];
        for (&idx, &g) in argmax.iter().zip(d_out.data()) {
            d_x[idx] += g;
        }
        Ok(LayerGradients { params: Vec::new(), input: Tensor::new(shape.clone(), d_x)? })
    }
}
