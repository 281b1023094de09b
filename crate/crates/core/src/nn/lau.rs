//! Dense layers of Lehmer activation units.
//!
//! Unit `j` owns a row of unconstrained pre-activations `v[j, ·]`, mapped to
//! positive weights by softplus, and a suddency moment. For the complex
//! variant the complex transform is read out through `α Re z + β Im z + γ`.

use super::{expect_shape, LayerGradients, LayerSpec, Mode, Module, NnError, Result};
use crate::kernel::{self, ComplexForward};
use crate::lehmer::{sigmoid, softplus, softplus_inverse, Complex, LehmerError, COMPLEX_DENOM_EPS};
use crate::tensor::Tensor;

/// Initial suddency: every unit starts as a weighted arithmetic mean.
pub const INIT_SUDDENCY: f64 = 1.0;

fn unit_weights(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| softplus(x).max(f64::MIN_POSITIVE)).collect()
}

fn check_positive_batch(layer: &'static str, x: &Tensor, n_in: usize) -> Result<()> {
    expect_shape(layer, x, &[n_in])?;
    for (i, &value) in x.data().iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(LehmerError::NonPositiveInput { index: i % n_in, value }.into());
        }
    }
    Ok(())
}

fn check_units(layer: &'static str, input: &[usize], n_in: usize, units: usize) -> Result<Vec<usize>> {
    if input != [n_in] {
        return Err(NnError::InputShape { layer, expected: format!("[batch, {n_in}]"), got: input.to_vec() });
    }
    Ok(vec![units])
}

/// Forward intermediates reused by the backward pass. Buffers keep their
/// allocation across batches.
#[derive(Debug, Clone, Default)]
struct Cache {
    x: Option<Tensor>,
    log_x: Vec<f64>,
    /// `[batch, units, n_in]` normalized exponential terms.
    r: Vec<f64>,
    /// `[batch, units, n_in]` phases, complex layer only.
    phase: Vec<Complex>,
    /// `[batch, units]` transform values.
    value: Vec<Complex>,
    inv: Vec<Complex>,
}

impl Cache {
    fn fill(&mut self, x: &Tensor, units: usize, complex: bool) {
        let len = x.batch() * units * x.sample_len();
        self.log_x.clear();
        self.log_x.extend(x.data().iter().map(|v| v.ln()));
        self.r.resize(len, 0.0);
        self.phase.resize(if complex { len } else { 0 }, Complex::new(0.0, 0.0));
        self.value.resize(x.batch() * units, Complex::new(0.0, 0.0));
        self.inv.resize(if complex { x.batch() * units } else { 0 }, Complex::new(0.0, 0.0));
        self.x = Some(x.clone());
    }
}

/// Real-valued LAU layer: `out[b, j] = L(X[b]; softplus(v[j]), s[j])`.
#[derive(Debug, Clone)]
pub struct LauLayerReal {
    pub n_in: usize,
    pub units: usize,
    /// `[units, n_in]`
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    cache: Cache,
}

impl LauLayerReal {
    /// Unit weights (`v = ln(e − 1)`) and `s = 1`.
    pub fn new(n_in: usize, units: usize) -> Self {
        let v0 = softplus_inverse(1.0);
        Self::with_params(n_in, units, vec![v0; n_in * units], vec![INIT_SUDDENCY; units])
    }

    pub fn with_params(n_in: usize, units: usize, v: Vec<f64>, s: Vec<f64>) -> Self {
        assert_eq!(v.len(), n_in * units);
        assert_eq!(s.len(), units);
        Self { n_in, units, v, s, cache: Cache::default() }
    }

    /// Positive weights of unit `j`.
    pub fn weights(&self, j: usize) -> Vec<f64> {
        unit_weights(&self.v[j * self.n_in..(j + 1) * self.n_in])
    }
}

impl Module for LauLayerReal {
    fn name(&self) -> &'static str {
        "lau_real"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::LauReal { n_in: self.n_in, units: self.units }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        check_units(self.name(), input, self.n_in, self.units)
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        check_positive_batch(self.name(), x, self.n_in)?;
        let (batch, n, units) = (x.batch(), self.n_in, self.units);
        let w = unit_weights(&self.v);
        self.cache.fill(x, units, false);
        let c = &mut self.cache;
        let mut out = vec![0.0; batch * units];
        for b in 0..batch {
            let (row, log_row) = (x.sample(b), &c.log_x[b * n..(b + 1) * n]);
            for j in 0..units {
                let at = b * units + j;
                let r = &mut c.r[at * n..(at + 1) * n];
                out[at] = kernel::real_forward(row, log_row, &w[j * n..(j + 1) * n], self.s[j], r);
                c.value[at] = Complex::new(out[at], 0.0);
            }
        }
        let out = Tensor::matrix(batch, units, out)?;
        if !out.all_finite() {
            return Err(NnError::NonFinite(self.name()));
        }
        Ok(out)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let c = &self.cache;
        let x = c.x.as_ref().ok_or(NnError::NoCache(self.name()))?;
        expect_shape(self.name(), d_out, &[self.units])?;
        let (batch, n, units) = (x.batch(), self.n_in, self.units);
        if d_out.batch() != batch {
            return Err(NnError::InputShape {
                layer: self.name(),
                expected: format!("[{batch}, {units}]"),
                got: d_out.shape().to_vec(),
            });
        }
        let w = unit_weights(&self.v);
        let mut d_v = vec![0.0; self.v.len()];
        let mut d_s = vec![0.0; units];
        let mut d_x = vec![0.0; batch * n];
        for b in 0..batch {
            let (row, log_row) = (x.sample(b), &c.log_x[b * n..(b + 1) * n]);
            let dx_row = &mut d_x[b * n..(b + 1) * n];
            for j in 0..units {
                let at = b * units + j;
                let g = d_out.data()[at];
                if g == 0.0 {
                    continue;
                }
                let dv = &mut d_v[j * n..(j + 1) * n];
                let r = &c.r[at * n..(at + 1) * n];
                let ds = kernel::real_backward(row, log_row, &w[j * n..(j + 1) * n], self.s[j], r, c.value[at].re, |k, dw, dx| {
                    dv[k] += g * dw;
                    dx_row[k] += g * dx;
                });
                d_s[j] += g * ds;
            }
        }
        // chain through softplus
        for (dv, &v) in d_v.iter_mut().zip(&self.v) {
            *dv *= sigmoid(v);
        }
        Ok(LayerGradients { params: vec![d_v, d_s], input: Tensor::matrix(batch, n, d_x)? })
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["v", "s"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![&self.v, &self.s]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.v, &mut self.s]
    }
}

/// Complex-valued LAU layer followed by the per-unit affine read-out.
#[derive(Debug, Clone)]
pub struct LauLayerComplex {
    pub n_in: usize,
    pub units: usize,
    /// `[units, n_in]`
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    cache: Cache,
    near_singular: usize,
}

impl LauLayerComplex {
    /// Unit weights, `(a, b) = (1, 0)` and `(α, β, γ) = (1, 0, 0)`.
    pub fn new(n_in: usize, units: usize) -> Self {
        let v0 = softplus_inverse(1.0);
        Self {
            n_in,
            units,
            v: vec![v0; n_in * units],
            a: vec![INIT_SUDDENCY; units],
            b: vec![0.0; units],
            alpha: vec![1.0; units],
            beta: vec![0.0; units],
            gamma: vec![0.0; units],
            cache: Cache::default(),
            near_singular: 0,
        }
    }

    pub fn weights(&self, j: usize) -> Vec<f64> {
        unit_weights(&self.v[j * self.n_in..(j + 1) * self.n_in])
    }

    /// Raw complex transform outputs `[batch, units]` before the read-out.
    pub fn transform(&mut self, x: &Tensor) -> Result<Vec<Complex>> {
        self.forward(x, Mode::Inference)?;
        Ok(self.cache.value.clone())
    }
}

impl Module for LauLayerComplex {
    fn name(&self) -> &'static str {
        "lau_complex"
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::LauComplex { n_in: self.n_in, units: self.units }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        check_units(self.name(), input, self.n_in, self.units)
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        check_positive_batch(self.name(), x, self.n_in)?;
        let (batch, n, units) = (x.batch(), self.n_in, self.units);
        let w = unit_weights(&self.v);
        self.cache.fill(x, units, true);
        let c = &mut self.cache;
        let mut out = vec![0.0; batch * units];
        let mut flagged = 0;
        for b in 0..batch {
            let (row, log_row) = (x.sample(b), &c.log_x[b * n..(b + 1) * n]);
            for j in 0..units {
                let at = b * units + j;
                let span = at * n..(at + 1) * n;
                let f = kernel::complex_forward(
                    row,
                    log_row,
                    &w[j * n..(j + 1) * n],
                    self.a[j],
                    self.b[j],
                    &mut c.r[span.clone()],
                    &mut c.phase[span],
                );
                flagged += usize::from(f.denom_ratio < COMPLEX_DENOM_EPS);
                c.value[at] = f.value;
                c.inv[at] = f.inv;
                out[at] = self.alpha[j] * f.value.re + self.beta[j] * f.value.im + self.gamma[j];
            }
        }
        self.near_singular = flagged;
        let out = Tensor::matrix(batch, units, out)?;
        if !out.all_finite() {
            return Err(NnError::NonFinite(self.name()));
        }
        Ok(out)
    }

    fn backward(&self, d_out: &Tensor) -> Result<LayerGradients> {
        let c = &self.cache;
        let x = c.x.as_ref().ok_or(NnError::NoCache(self.name()))?;
        expect_shape(self.name(), d_out, &[self.units])?;
        let (batch, n, units) = (x.batch(), self.n_in, self.units);
        if d_out.batch() != batch {
            return Err(NnError::InputShape {
                layer: self.name(),
                expected: format!("[{batch}, {units}]"),
                got: d_out.shape().to_vec(),
            });
        }
        let w = unit_weights(&self.v);
        let mut d_v = vec![0.0; self.v.len()];
        let mut d_a = vec![0.0; units];
        let mut d_b = vec![0.0; units];
        let mut d_alpha = vec![0.0; units];
        let mut d_beta = vec![0.0; units];
        let mut d_gamma = vec![0.0; units];
        let mut d_x = vec![0.0; batch * n];
        for b in 0..batch {
            let (row, log_row) = (x.sample(b), &c.log_x[b * n..(b + 1) * n]);
            let dx_row = &mut d_x[b * n..(b + 1) * n];
            for j in 0..units {
                let at = b * units + j;
                let g = d_out.data()[at];
                if g == 0.0 {
                    continue;
                }
                let z = c.value[at];
                d_alpha[j] += g * z.re;
                d_beta[j] += g * z.im;
                d_gamma[j] += g;
                // y = α Re z + β Im z + γ, so dy/dθ = Re((α − iβ)·dz/dθ)
                let up = Complex::new(self.alpha[j], -self.beta[j]) * g;
                let dv = &mut d_v[j * n..(j + 1) * n];
                let span = at * n..(at + 1) * n;
                let fwd = ComplexForward { value: z, denom_ratio: 0.0, inv: c.inv[at] };
                let s = Complex::new(self.a[j], self.b[j]);
                let ds = kernel::complex_backward(
                    row,
                    log_row,
                    &w[j * n..(j + 1) * n],
                    s,
                    &c.r[span.clone()],
                    &c.phase[span],
                    &fwd,
                    |k, dw, dx| {
                        dv[k] += (up * dw).re;
                        dx_row[k] += (up * dx).re;
                    },
                );
                d_a[j] += (up * ds).re;
                d_b[j] += (up * ds * Complex::i()).re;
            }
        }
        for (dv, &v) in d_v.iter_mut().zip(&self.v) {
            *dv *= sigmoid(v);
        }
        Ok(LayerGradients {
            params: vec![d_v, d_a, d_b, d_alpha, d_beta, d_gamma],
            input: Tensor::matrix(batch, n, d_x)?,
        })
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["v", "a", "b", "alpha", "beta", "gamma"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![&self.v, &self.a, &self.b, &self.alpha, &self.beta, &self.gamma]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.v,
            &mut self.a,
            &mut self.b,
            &mut self.alpha,
            &mut self.beta,
            &mut self.gamma,
        ]
    }

    fn near_singular_count(&self) -> usize {
        self.near_singular
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::{grad_complex, lehmer_real_with_grad};
    use crate::lehmer::{lehmer_complex, lehmer_real, relau, ReLAUParams, SuddencyComplex};
    use crate::nn::testing::check_layer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(1.0 / E..E)).collect()
    }

    fn random_real_layer(rng: &mut ChaCha8Rng, n_in: usize, units: usize) -> LauLayerReal {
        let v = (0..n_in * units).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = (0..units).map(|_| rng.random_range(-3.0..3.0)).collect();
        LauLayerReal::with_params(n_in, units, v, s)
    }

    fn random_complex_layer(rng: &mut ChaCha8Rng, n_in: usize, units: usize) -> LauLayerComplex {
        let mut l = LauLayerComplex::new(n_in, units);
        for v in l.v.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        for j in 0..units {
            l.a[j] = rng.random_range(-3.0..3.0);
            l.b[j] = rng.random_range(-3.0..3.0);
            l.alpha[j] = rng.random_range(-1.5..1.5);
            l.beta[j] = rng.random_range(-1.5..1.5);
            l.gamma[j] = rng.random_range(-1.0..1.0);
        }
        l
    }

    #[test]
    fn initial_unit_is_arithmetic_mean() {
        let mut l = LauLayerReal::new(3, 1);
        let y = l.forward(&Tensor::matrix(1, 3, vec![0.5, 1.0, 2.1]).unwrap(), Mode::Train).unwrap();
        assert!((y.data()[0] - 3.6 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_row_passes_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = random_real_layer(&mut rng, 4, 3);
        let y = l.forward(&Tensor::matrix(1, 4, vec![1.7; 4]).unwrap(), Mode::Train).unwrap();
        assert!(y.data().iter().all(|v| (v - 1.7).abs() < 1e-13));
        let mut c = LauLayerComplex::new(4, 2);
        c.a = vec![-0.5, 3.0];
        c.b = vec![1.2, -2.0];
        let y = c.forward(&Tensor::matrix(1, 4, vec![1.7; 4]).unwrap(), Mode::Train).unwrap();
        assert!(y.data().iter().all(|v| (v - 1.7).abs() < 1e-13));
    }

    #[test]
    fn forward_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut l = random_real_layer(&mut rng, 3, 2);
        let x = Tensor::matrix(2, 3, random_positive(&mut rng, 6)).unwrap();
        let y = l.forward(&x, Mode::Train).unwrap();
        for b in 0..2 {
            for j in 0..2 {
                let expect = lehmer_real(x.sample(b), &l.weights(j), l.s[j]).unwrap();
                assert_eq!(y.data()[b * 2 + j], expect);
            }
        }

        let mut c = random_complex_layer(&mut rng, 3, 2);
        let y = c.forward(&x, Mode::Train).unwrap();
        for b in 0..2 {
            for j in 0..2 {
                let z = lehmer_complex(x.sample(b), &c.weights(j), SuddencyComplex::new(c.a[j], c.b[j]))
                    .unwrap()
                    .value;
                let p = ReLAUParams { alpha: c.alpha[j], beta: c.beta[j], gamma: c.gamma[j] };
                assert!((y.data()[b * 2 + j] - relau(z, p)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_input() {
        let mut l = LauLayerReal::new(2, 1);
        let err = l.forward(&Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap(), Mode::Train).unwrap_err();
        assert!(matches!(err, NnError::Domain(_)));
        assert!(l.forward(&Tensor::matrix(1, 3, vec![1.0; 3]).unwrap(), Mode::Train).is_err());
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut l = random_real_layer(&mut rng, 3, 2);
        let x = Tensor::matrix(2, 3, random_positive(&mut rng, 6)).unwrap();
        l.forward(&x, Mode::Train).unwrap();
        let g = l.backward(&Tensor::zeros(vec![2, 2])).unwrap();
        assert!(g.params.iter().flatten().chain(g.input.data()).all(|v| *v == 0.0));

        let mut c = random_complex_layer(&mut rng, 3, 2);
        c.forward(&x, Mode::Train).unwrap();
        let g = c.backward(&Tensor::zeros(vec![2, 2])).unwrap();
        assert!(g.params.iter().flatten().chain(g.input.data()).all(|v| *v == 0.0));
    }

    #[test]
    fn real_layer_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let mut l = random_real_layer(&mut rng, 4, 3);
            let x = Tensor::matrix(3, 4, random_positive(&mut rng, 12)).unwrap();
            let probe = vec![1.0; 9];
            let worst = check_layer(&mut l, &x, &probe, Mode::Train, 1e-5);
            assert!(worst < 1e-5, "worst {worst}");
        }
    }

    #[test]
    fn complex_layer_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let mut l = random_complex_layer(&mut rng, 4, 3);
            let x = Tensor::matrix(3, 4, random_positive(&mut rng, 12)).unwrap();
            let probe: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
            let worst = check_layer(&mut l, &x, &probe, Mode::Train, 1e-5);
            assert!(worst < 1e-5, "worst {worst}");
        }
    }

    #[test]
    fn single_unit_matches_scalar_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut l = random_real_layer(&mut rng, 5, 1);
        let x = random_positive(&mut rng, 5);
        l.forward(&Tensor::matrix(1, 5, x.clone()).unwrap(), Mode::Train).unwrap();
        let g = l.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        let (_, scalar) = lehmer_real_with_grad(&x, &l.weights(0), l.s[0]).unwrap();
        assert_eq!(g.params[1][0], scalar.d_s);
        assert_eq!(g.input.data(), &scalar.d_x[..]);
        for k in 0..5 {
            assert_eq!(g.params[0][k], scalar.d_w[k] * sigmoid(l.v[k]));
        }

        let mut c = random_complex_layer(&mut rng, 5, 1);
        c.forward(&Tensor::matrix(1, 5, x.clone()).unwrap(), Mode::Train).unwrap();
        let g = c.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        let scalar = grad_complex(&x, &c.weights(0), SuddencyComplex::new(c.a[0], c.b[0])).unwrap();
        let proj = |z: Complex| c.alpha[0] * z.re + c.beta[0] * z.im;
        assert!((g.params[1][0] - proj(scalar.d_a)).abs() < 1e-15);
        assert!((g.params[2][0] - proj(scalar.d_b)).abs() < 1e-15);
    }

    #[test]
    fn complex_collapses_to_real_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut real = random_real_layer(&mut rng, 4, 2);
        let mut complex = LauLayerComplex::new(4, 2);
        complex.v = real.v.clone();
        complex.a = real.s.clone();
        let x = Tensor::matrix(3, 4, random_positive(&mut rng, 12)).unwrap();
        let yr = real.forward(&x, Mode::Train).unwrap();
        let yc = complex.forward(&x, Mode::Train).unwrap();
        for (a, b) in yr.data().iter().zip(yc.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        let probe = Tensor::matrix(3, 2, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let gr = real.backward(&probe).unwrap();
        let gc = complex.backward(&probe).unwrap();
        for (a, b) in gr.params[0].iter().zip(&gc.params[0]) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in gr.params[1].iter().zip(&gc.params[1]) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in gr.input.data().iter().zip(gc.input.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
