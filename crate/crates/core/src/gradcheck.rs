//! Randomized agreement suite between analytic gradients and central
//! finite differences.
//!
//! Each "kind" draws its own cases from a seeded stream and records the
//! worst [`scaled_error`] seen together with the inputs that produced it.

use std::f64::consts::E;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grad::{
    finite_diff_check, finite_diff_second, grad2_s_real, grad_complex, grad_relau,
    grad_s_pairwise_unweighted, grad_softplus, lehmer_complex_with_grad, lehmer_real_with_grad,
};
use crate::lehmer::{
    lehmer_complex, lehmer_real, relau, softplus, Complex, ReLAUParams, SuddencyComplex,
};
use crate::nn::{
    softmax_cross_entropy, BatchNorm2d, Conv2d, Dense, LauKind, LauLayerComplex, LauLayerReal,
    MaxPool2d, Mode, Module, Network, Squash,
};
use crate::tensor::Tensor;

/// Step for first-derivative differences.
pub const FD_STEP: f64 = 1e-5;
/// Step for the second-order difference of the s-curvature.
pub const FD_STEP_SECOND: f64 = 1e-3;
/// Gradient agreement threshold for pointwise kernels and LAU/dense layers.
pub const TOL_FIRST: f64 = 1e-5;
/// Threshold for conv/batch-norm composites and the second s-derivative.
pub const TOL_COMPOSITE: f64 = 1e-4;
/// Threshold for the two Euler identities.
pub const TOL_EULER: f64 = 1e-10;

/// `|a − b| / max(|a|, |b|, 1e-3)`: relative error that turns into an
/// absolute error (scaled by 1e3) for values near zero. At a relative
/// threshold of 1e-5 this allows 1e-8 absolute slack near zero.
pub fn scaled_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradcheckError {
    #[error("number of cases must be at least 1")]
    NoCases,
}

#[derive(Debug, Clone)]
pub struct GradcheckConfig {
    pub seed: u64,
    /// Randomized cases per pointwise kernel.
    pub cases: usize,
    /// Cases per layer-level check; layers are far more expensive.
    pub layer_cases: usize,
    /// Added to the analytic `∂L/∂s` before comparison. Only for exercising
    /// the failure path.
    pub fault: f64,
}

impl GradcheckConfig {
    pub fn new(seed: u64, cases: usize) -> Self {
        Self { seed, cases, layer_cases: (cases / 50).max(2), fault: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct KindReport {
    pub kind: &'static str,
    pub cases: usize,
    pub tolerance: f64,
    pub worst: f64,
    /// Inputs of the worst case, formatted for reproduction.
    pub worst_case: String,
}

impl KindReport {
    pub(crate) fn new(kind: &'static str, tolerance: f64) -> Self {
        Self { kind, cases: 0, tolerance, worst: 0.0, worst_case: String::new() }
    }

    pub(crate) fn record(&mut self, err: f64, case: impl FnOnce() -> String) {
        if err > self.worst || err.is_nan() {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
            self.worst_case = case();
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub kinds: Vec<KindReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.kinds.iter().all(KindReport::passed)
    }

    pub fn total_cases(&self) -> usize {
        self.kinds.iter().map(|k| k.cases).sum()
    }

    pub fn kind(&self, name: &str) -> Option<&KindReport> {
        self.kinds.iter().find(|k| k.kind == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in &self.kinds {
            let _ = writeln!(
                out,
                "{:<5} {:<24} cases={:<5} worst={:.3e} tol={:.0e}",
                if k.passed() { "PASS" } else { "FAIL" },
                k.kind,
                k.cases,
                k.worst,
                k.tolerance
            );
            if !k.passed() {
                let _ = writeln!(out, "      worst case: {}", k.worst_case);
            }
        }
        out
    }
}

struct Case {
    x: Vec<f64>,
    w: Vec<f64>,
    s: f64,
    b: f64,
}

impl Case {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(1..=8);
        let x = (0..n).map(|_| rng.random_range(1.0 / E..E)).collect();
        let w = (0..n).map(|_| softplus(rng.random_range(-3.0..3.0))).collect();
        Self { x, w, s: rng.random_range(-5.0..5.0), b: rng.random_range(-5.0..5.0) }
    }

    fn describe(&self) -> String {
        format!("x={:?} w={:?} s|a={} b={}", self.x, self.w, self.s, self.b)
    }
}

/// Runs every kernel and layer check.
pub fn run_gradcheck(config: &GradcheckConfig) -> Result<GradcheckReport, GradcheckError> {
    if config.cases == 0 || config.layer_cases == 0 {
        return Err(GradcheckError::NoCases);
    }
    let mut kinds = Vec::new();
    kinds.extend(real_kernels(config));
    kinds.extend(complex_kernels(config));
    kinds.extend(scalar_maps(config));
    kinds.extend(layers(config));
    Ok(GradcheckReport { kinds })
}

fn real_kernels(config: &GradcheckConfig) -> Vec<KindReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ds = KindReport::new("real.d_s", TOL_FIRST);
    let mut d2s = KindReport::new("real.d2_s", TOL_COMPOSITE);
    let mut d2s_consistency = KindReport::new("real.d2_s_vs_d_s", TOL_FIRST);
    let mut dw = KindReport::new("real.d_w", TOL_FIRST);
    let mut dx = KindReport::new("real.d_x", TOL_FIRST);
    let mut pairwise = KindReport::new("real.pairwise_d_s", 1e-12);
    let mut euler_w = KindReport::new("euler.sum_w_dw", TOL_EULER);
    let mut euler_x = KindReport::new("euler.sum_x_dx", TOL_EULER);
    for _ in 0..config.cases {
        let c = Case::draw(&mut rng);
        let (value, g) = lehmer_real_with_grad(&c.x, &c.w, c.s).expect("valid case");

        let fd = finite_diff_check(|p| lehmer_real(&c.x, &c.w, p[0]), &[c.s], FD_STEP).unwrap()[0];
        ds.record(scaled_error(g.d_s + config.fault, fd), || c.describe());

        let g2 = grad2_s_real(&c.x, &c.w, c.s).unwrap();
        let fd2 = finite_diff_second(|s| lehmer_real(&c.x, &c.w, s), c.s, FD_STEP_SECOND).unwrap();
        d2s.record(scaled_error(g2, fd2), || c.describe());
        let fd_of_first = finite_diff_check(
            |p| lehmer_real_with_grad(&c.x, &c.w, p[0]).map(|r| r.1.d_s),
            &[c.s],
            FD_STEP,
        )
        .unwrap()[0];
        d2s_consistency.record(scaled_error(g2, fd_of_first), || c.describe());

        let fd_w = finite_diff_check(|p| lehmer_real(&c.x, p, c.s), &c.w, FD_STEP).unwrap();
        let err = g.d_w.iter().zip(&fd_w).map(|(a, b)| scaled_error(*a, *b)).fold(0.0, f64::max);
        dw.record(err, || c.describe());

        let fd_x = finite_diff_check(|p| lehmer_real(p, &c.w, c.s), &c.x, FD_STEP).unwrap();
        let err = g.d_x.iter().zip(&fd_x).map(|(a, b)| scaled_error(*a, *b)).fold(0.0, f64::max);
        dx.record(err, || c.describe());

        let unit = vec![1.0; c.x.len()];
        let weighted = lehmer_real_with_grad(&c.x, &unit, c.s).unwrap().1.d_s;
        let pair = grad_s_pairwise_unweighted(&c.x, c.s).unwrap();
        pairwise.record((weighted - pair).abs() / weighted.abs().max(1.0), || c.describe());

        let sum_w: f64 = c.w.iter().zip(&g.d_w).map(|(a, b)| a * b).sum();
        euler_w.record(sum_w.abs(), || c.describe());
        let sum_x: f64 = c.x.iter().zip(&g.d_x).map(|(a, b)| a * b).sum();
        euler_x.record((sum_x - value).abs() / value, || c.describe());
        for k in [&mut ds, &mut d2s, &mut d2s_consistency, &mut dw, &mut dx, &mut pairwise, &mut euler_w, &mut euler_x] {
            k.cases += 1;
        }
    }
    vec![ds, d2s, d2s_consistency, dw, dx, pairwise, euler_w, euler_x]
}

fn complex_kernels(config: &GradcheckConfig) -> Vec<KindReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x00c0_ffee);
    let mut da = KindReport::new("complex.d_a", TOL_FIRST);
    let mut db = KindReport::new("complex.d_b", TOL_FIRST);
    let mut dw = KindReport::new("complex.d_w", TOL_FIRST);
    let mut dx = KindReport::new("complex.d_x", TOL_FIRST);
    let mut continuity = KindReport::new("complex.b_continuity", 1e-4);
    let mut euler_x = KindReport::new("euler.complex_sum_x_dx", TOL_EULER);
    let pick = |z: Complex, part: usize| if part == 0 { z.re } else { z.im };
    for _ in 0..config.cases {
        let c = Case::draw(&mut rng);
        let s = SuddencyComplex::new(c.s, c.b);
        let (value, g) = lehmer_complex_with_grad(&c.x, &c.w, s).expect("valid case");
        let mut worst = [0.0f64; 4];
        for part in 0..2 {
            let f_a = |p: &[f64]| {
                lehmer_complex(&c.x, &c.w, SuddencyComplex::new(p[0], c.b)).map(|r| pick(r.value, part))
            };
            let fd = finite_diff_check(f_a, &[c.s], FD_STEP).unwrap()[0];
            worst[0] = worst[0].max(scaled_error(pick(g.d_a, part), fd));
            let f_b = |p: &[f64]| {
                lehmer_complex(&c.x, &c.w, SuddencyComplex::new(c.s, p[0])).map(|r| pick(r.value, part))
            };
            let fd = finite_diff_check(f_b, &[c.b], FD_STEP).unwrap()[0];
            worst[1] = worst[1].max(scaled_error(pick(g.d_b, part), fd));
            let fd = finite_diff_check(|p| lehmer_complex(&c.x, p, s).map(|r| pick(r.value, part)), &c.w, FD_STEP)
                .unwrap();
            for (a, b) in g.d_w.iter().zip(&fd) {
                worst[2] = worst[2].max(scaled_error(pick(*a, part), *b));
            }
            let fd = finite_diff_check(|p| lehmer_complex(p, &c.w, s).map(|r| pick(r.value, part)), &c.x, FD_STEP)
                .unwrap();
            for (a, b) in g.d_x.iter().zip(&fd) {
                worst[3] = worst[3].max(scaled_error(pick(*a, part), *b));
            }
        }
        da.record(worst[0], || c.describe());
        db.record(worst[1], || c.describe());
        dw.record(worst[2], || c.describe());
        dx.record(worst[3], || c.describe());

        let at_zero = grad_complex(&c.x, &c.w, SuddencyComplex::new(c.s, 0.0)).unwrap();
        let mut gap: f64 = 0.0;
        for b in [1e-6, -1e-6] {
            let near = grad_complex(&c.x, &c.w, SuddencyComplex::new(c.s, b)).unwrap();
            gap = gap.max((near.d_a - at_zero.d_a).norm()).max((near.d_b - at_zero.d_b).norm());
            for (p, q) in near.d_w.iter().zip(&at_zero.d_w).chain(near.d_x.iter().zip(&at_zero.d_x)) {
                gap = gap.max((p - q).norm());
            }
        }
        continuity.record(gap, || c.describe());

        let sum: Complex = c.x.iter().zip(&g.d_x).map(|(x, d)| d * *x).sum();
        euler_x.record((sum - value.value).norm() / value.value.norm().max(1e-300), || c.describe());
        for k in [&mut da, &mut db, &mut dw, &mut dx, &mut continuity, &mut euler_x] {
            k.cases += 1;
        }
    }
    vec![da, db, dw, dx, continuity, euler_x]
}

fn scalar_maps(config: &GradcheckConfig) -> Vec<KindReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5ca1a);
    let mut relau_k = KindReport::new("relau", TOL_FIRST);
    let mut softplus_k = KindReport::new("softplus", TOL_FIRST);
    for _ in 0..config.cases {
        let z = Complex::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let p = ReLAUParams {
            alpha: rng.random_range(-2.0..2.0),
            beta: rng.random_range(-2.0..2.0),
            gamma: rng.random_range(-2.0..2.0),
        };
        let g = grad_relau(z, p);
        let fd_p = finite_diff_check::<_, ()>(
            |q| Ok(relau(z, ReLAUParams { alpha: q[0], beta: q[1], gamma: q[2] })),
            &[p.alpha, p.beta, p.gamma],
            FD_STEP,
        )
        .unwrap();
        let fd_z = finite_diff_check::<_, ()>(|q| Ok(relau(Complex::new(q[0], q[1]), p)), &[z.re, z.im], FD_STEP)
            .unwrap();
        let err = [
            scaled_error(g.d_alpha, fd_p[0]),
            scaled_error(g.d_beta, fd_p[1]),
            scaled_error(g.d_gamma, fd_p[2]),
            scaled_error(g.d_z.re, fd_z[0]),
            scaled_error(g.d_z.im, fd_z[1]),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        relau_k.record(err, || format!("z={z} p={p:?}"));
        relau_k.cases += 1;

        let v = rng.random_range(-40.0..40.0);
        let fd = finite_diff_check::<_, ()>(|q| Ok(softplus(q[0])), &[v], FD_STEP).unwrap()[0];
        softplus_k.record(scaled_error(grad_softplus(&[v])[0], fd), || format!("v={v}"));
        softplus_k.cases += 1;
    }
    vec![relau_k, softplus_k]
}

/// Worst scaled error between a layer's backward pass and central
/// differences of `Σ forward(x) ⊙ probe`, over every parameter and input.
pub fn layer_error(layer: &mut dyn Module, x: &Tensor, probe: &[f64], mode: Mode, h: f64) -> f64 {
    let probe_loss = |layer: &mut dyn Module, x: &Tensor| -> f64 {
        let out = layer.forward(x, mode).expect("forward");
        out.data().iter().zip(probe).map(|(a, b)| a * b).sum()
    };
    let out = layer.forward(x, mode).expect("forward");
    let d_out = Tensor::new(out.shape().to_vec(), probe.to_vec()).expect("probe shape");
    let grads = layer.backward(&d_out).expect("backward");
    let mut worst: f64 = 0.0;
    for p in 0..layer.params().len() {
        let base = layer.params()[p].to_vec();
        let fd = finite_diff_check::<_, ()>(
            |vals| {
                layer.params_mut()[p].copy_from_slice(vals);
                Ok(probe_loss(layer, x))
            },
            &base,
            h,
        )
        .unwrap();
        layer.params_mut()[p].copy_from_slice(&base);
        for (a, b) in grads.params[p].iter().zip(&fd) {
            worst = worst.max(scaled_error(*a, *b));
        }
    }
    let fd = finite_diff_check::<_, ()>(
        |vals| {
            let xp = Tensor::new(x.shape().to_vec(), vals.to_vec()).unwrap();
            Ok(probe_loss(layer, &xp))
        },
        x.data(),
        h,
    )
    .unwrap();
    for (a, b) in grads.input.data().iter().zip(&fd) {
        worst = worst.max(scaled_error(*a, *b));
    }
    worst
}

/// Worst scaled error of the end-to-end cross-entropy gradient.
pub fn network_error(net: &mut Network, x: &Tensor, labels: &[usize], h: f64) -> f64 {
    let loss = |net: &mut Network| {
        let logits = net.forward(x, Mode::Train).expect("forward");
        softmax_cross_entropy(&logits, labels).expect("loss").0
    };
    let logits = net.forward(x, Mode::Train).expect("forward");
    let (_, d) = softmax_cross_entropy(&logits, labels).expect("loss");
    let grads = net.backward(&d).expect("backward");
    let analytic: Vec<Vec<f64>> =
        grads.iter().flat_map(|g| g.params.iter().cloned()).collect();
    let mut worst: f64 = 0.0;
    for (p, analytic) in analytic.iter().enumerate() {
        let base = net.params()[p].to_vec();
        let fd = finite_diff_check::<_, ()>(
            |vals| {
                net.params_mut()[p].copy_from_slice(vals);
                Ok(loss(net))
            },
            &base,
            h,
        )
        .unwrap();
        net.params_mut()[p].copy_from_slice(&base);
        for (a, b) in analytic.iter().zip(&fd) {
            worst = worst.max(scaled_error(*a, *b));
        }
    }
    worst
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn layers(config: &GradcheckConfig) -> Vec<KindReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x1a7e5);
    let mut lau_real = KindReport::new("layer.lau_real", TOL_FIRST);
    let mut lau_complex = KindReport::new("layer.lau_complex", TOL_FIRST);
    let mut dense = KindReport::new("layer.dense", TOL_FIRST);
    let mut squash = KindReport::new("layer.squash", TOL_FIRST);
    let mut pool = KindReport::new("layer.maxpool2d", TOL_FIRST);
    let mut conv = KindReport::new("layer.conv2d", TOL_COMPOSITE);
    let mut bn = KindReport::new("layer.batchnorm2d", TOL_COMPOSITE);
    let mut net_tab = KindReport::new("network.tabular", TOL_COMPOSITE);
    let mut net_conv = KindReport::new("network.conv_lau", TOL_COMPOSITE);

    for case in 0..config.layer_cases {
        let (batch, n_in, units) = (rng.random_range(1..=4), rng.random_range(1..=6), rng.random_range(1..=3));
        let x = Tensor::matrix(batch, n_in, uniform(&mut rng, batch * n_in, 1.0 / E, E)).unwrap();
        let probe = uniform(&mut rng, batch * units, -1.0, 1.0);
        let desc = || format!("case {case}: batch={batch} n_in={n_in} units={units}");

        let mut l = LauLayerReal::with_params(
            n_in,
            units,
            uniform(&mut rng, n_in * units, -3.0, 3.0),
            uniform(&mut rng, units, -5.0, 5.0),
        );
        lau_real.record(layer_error(&mut l, &x, &probe, Mode::Train, FD_STEP), desc);

        let mut c = LauLayerComplex::new(n_in, units);
        c.v = uniform(&mut rng, n_in * units, -3.0, 3.0);
        c.a = uniform(&mut rng, units, -5.0, 5.0);
        c.b = uniform(&mut rng, units, -5.0, 5.0);
        c.alpha = uniform(&mut rng, units, -2.0, 2.0);
        c.beta = uniform(&mut rng, units, -2.0, 2.0);
        c.gamma = uniform(&mut rng, units, -2.0, 2.0);
        lau_complex.record(layer_error(&mut c, &x, &probe, Mode::Train, FD_STEP), desc);

        let mut d = Dense::init(n_in, units, &mut rng);
        d.bias = uniform(&mut rng, units, -1.0, 1.0);
        dense.record(layer_error(&mut d, &x, &probe, Mode::Train, FD_STEP), desc);

        let z = Tensor::matrix(batch, n_in, uniform(&mut rng, batch * n_in, -3.0, 3.0)).unwrap();
        let probe_sq = uniform(&mut rng, batch * n_in, -1.0, 1.0);
        squash.record(layer_error(&mut Squash::default(), &z, &probe_sq, Mode::Train, FD_STEP), desc);

        let (ch, hw) = (rng.random_range(1..=3), rng.random_range(4..=6));
        let img = Tensor::new(vec![batch, ch, hw, hw], uniform(&mut rng, batch * ch * hw * hw, -2.0, 2.0)).unwrap();
        let img_desc = || format!("case {case}: image [{batch}, {ch}, {hw}, {hw}]");
        let mut p = MaxPool2d::new(2, 2);
        let out_len = p.forward(&img, Mode::Train).unwrap().len();
        pool.record(
            layer_error(&mut p, &img, &uniform(&mut rng, out_len, -1.0, 1.0), Mode::Train, 1e-6),
            img_desc,
        );

        let (stride, padding) = (rng.random_range(1..=2), rng.random_range(0..=1));
        let mut cv = Conv2d::init(ch, 2, 3, stride, padding, &mut rng);
        cv.bias = uniform(&mut rng, 2, -0.5, 0.5);
        let out_len = cv.forward(&img, Mode::Train).unwrap().len();
        conv.record(
            layer_error(&mut cv, &img, &uniform(&mut rng, out_len, -1.0, 1.0), Mode::Train, FD_STEP),
            img_desc,
        );

        for mode in [Mode::Train, Mode::Inference] {
            let mut b = BatchNorm2d::new(ch);
            b.scale = uniform(&mut rng, ch, -1.5, 1.5);
            b.shift = uniform(&mut rng, ch, -1.0, 1.0);
            b.running_mean = uniform(&mut rng, ch, -0.5, 0.5);
            b.running_var = uniform(&mut rng, ch, 0.5, 2.0);
            let probe_bn = uniform(&mut rng, img.len(), -1.0, 1.0);
            bn.record(layer_error(&mut b, &img, &probe_bn, mode, FD_STEP), img_desc);
        }

        for kind in [LauKind::Real, LauKind::Complex] {
            let mut net = Network::tabular(n_in, 3, kind, units, rng.random()).unwrap();
            for p in net.params_mut() {
                for v in p.iter_mut() {
                    *v += rng.random_range(-0.5..0.5);
                }
            }
            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let xb = Tensor::matrix(4, n_in, uniform(&mut rng, 4 * n_in, 1.0 / E, E)).unwrap();
            net_tab.record(network_error(&mut net, &xb, &labels, FD_STEP), || format!("{kind} {}", desc()));
        }

        let specs = [
            crate::nn::LayerSpec::Conv2d { in_channels: 1, out_channels: 2, kernel: 3, stride: 1, padding: 1 },
            crate::nn::LayerSpec::BatchNorm2d { channels: 2 },
            crate::nn::LayerSpec::Relu,
            crate::nn::LayerSpec::MaxPool2d { window: 2, stride: 2 },
            crate::nn::LayerSpec::Flatten,
            crate::nn::LayerSpec::Squash,
            LauKind::Complex.layer(8, 3),
            crate::nn::LayerSpec::Dense { n_in: 3, n_out: 2 },
        ];
        let mut net = Network::new(vec![1, 4, 4], &specs, rng.random()).unwrap();
        for p in net.params_mut() {
            for v in p.iter_mut() {
                *v += rng.random_range(-0.3..0.3);
            }
        }
        let xb = Tensor::new(vec![4, 1, 4, 4], uniform(&mut rng, 64, 0.0, 1.0)).unwrap();
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..2)).collect();
        net_conv.record(network_error(&mut net, &xb, &labels, FD_STEP), || format!("case {case}"));

        for k in [&mut lau_real, &mut lau_complex, &mut dense, &mut squash, &mut pool, &mut conv, &mut net_conv] {
            k.cases += 1;
        }
        bn.cases += 2;
        net_tab.cases += 2;
    }
    vec![lau_real, lau_complex, dense, squash, pool, conv, bn, net_tab, net_conv]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = run_gradcheck(&GradcheckConfig { seed: 1, cases: 60, layer_cases: 2, fault: 0.0 }).unwrap();
        assert!(report.passed(), "\n{}", report.render());
    }

    #[test]
    fn injected_fault_is_caught() {
        let report = run_gradcheck(&GradcheckConfig { seed: 1, cases: 20, layer_cases: 1, fault: 1e-3 }).unwrap();
        assert!(!report.passed());
        assert!(!report.kind("real.d_s").unwrap().passed());
        assert!(report.render().contains("worst case: x="));
    }

    #[test]
    fn zero_cases_rejected() {
        assert_eq!(run_gradcheck(&GradcheckConfig::new(0, 0)).unwrap_err(), GradcheckError::NoCases);
    }

    #[test]
    fn scaled_error_floor() {
        assert_eq!(scaled_error(2.0, 2.0), 0.0);
        assert!((scaled_error(1e-9, 2e-9) - 1e-6).abs() < 1e-18);
        assert!((scaled_error(10.0, 10.1) - 0.1 / 10.1).abs() < 1e-15);
    }
}
