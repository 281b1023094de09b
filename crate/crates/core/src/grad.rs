//! Closed-form derivatives of the weighted Lehmer transforms.
//!
//! Everything here is written in terms of the two normalized weight
//! distributions `p ∝ w xˢ` and `q ∝ w xˢ⁻¹`. With `Λ(s) = ln L(s)`:
//!
//! ```text
//! Λ′(s)  = E_p[ln x] − E_q[ln x]
//! Λ″(s)  = Var_p[ln x] − Var_q[ln x]
//! ∂L/∂s  = L·Λ′
//! ∂²L/∂s² = L·(Λ″ + Λ′²)
//! ∂L/∂wₖ = xₖˢ⁻¹ (xₖ − L) / Σ w xˢ⁻¹
//! ∂L/∂xₖ = wₖ xₖˢ⁻¹ (s − (s−1) L / xₖ) / Σ w xˢ⁻¹
//! ```
//!
//! The complex transform is holomorphic in `s = a + ib`, so `∂L/∂b = i·∂L/∂a`;
//! all complex partials are returned as derivatives of `(Re L, Im L)` with
//! respect to one real parameter.

use crate::kernel;
use crate::lehmer::{
    check_finite, check_pair, lehmer_real, Complex, ComplexLehmer, RealMoments, ReLAUParams, Result,
    SuddencyComplex,
};

/// Gradient of the real transform with respect to all of its arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGradients {
    pub d_s: f64,
    pub d_w: Vec<f64>,
    pub d_x: Vec<f64>,
}

/// Jacobian columns of `(Re L, Im L)` for the complex transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGradients {
    pub d_a: Complex,
    pub d_b: Complex,
    pub d_w: Vec<Complex>,
    pub d_x: Vec<Complex>,
    pub near_singular: bool,
}

impl ComplexGradients {
    /// `∂L/∂a + i·∂L/∂b` as written for the Wirtinger-style report.
    ///
    /// Because the transform is holomorphic in `s`, this combination equals
    /// `2·∂L/∂s̄` and vanishes up to rounding; [`Self::holomorphic_derivative`]
    /// is the complex derivative `dL/ds`.
    pub fn reported_ds(&self) -> Complex {
        self.d_a + Complex::i() * self.d_b
    }

    /// `dL/ds = ∂L/∂a = −i·∂L/∂b`.
    pub fn holomorphic_derivative(&self) -> Complex {
        self.d_a
    }
}

/// `Λ = ln L` and its first two s-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLehmer {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Value and full gradient in one pass.
pub fn lehmer_real_with_grad(x: &[f64], w: &[f64], s: f64) -> Result<(f64, RealGradients)> {
    check_pair(x, w)?;
    check_finite("s", s)?;
    let n = x.len();
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut r = vec![0.0; n];
    let value = kernel::real_forward(x, &log_x, w, s, &mut r);
    let (mut d_w, mut d_x) = (vec![0.0; n], vec![0.0; n]);
    let d_s = kernel::real_backward(x, &log_x, w, s, &r, value, |k, dw, dx| {
        d_w[k] = dw;
        d_x[k] = dx;
    });
    Ok((value, RealGradients { d_s, d_w, d_x }))
}

/// `∂L/∂s`, never negative.
pub fn grad_s_real(x: &[f64], w: &[f64], s: f64) -> Result<f64> {
    check_pair(x, w)?;
    check_finite("s", s)?;
    let m = RealMoments::new(x, w, s);
    Ok((m.value(x) * (m.log_mean_num() - m.log_mean_den())).max(0.0))
}

/// `Λ(s) = ln L(s)` with `Λ′` and `Λ″`.
pub fn log_lehmer(x: &[f64], w: &[f64], s: f64) -> Result<LogLehmer> {
    check_pair(x, w)?;
    check_finite("s", s)?;
    let m = RealMoments::new(x, w, s);
    Ok(LogLehmer {
        value: m.value(x).ln(),
        first: m.log_mean_num() - m.log_mean_den(),
        second: m.log_var_num() - m.log_var_den(),
    })
}

/// `∂²L/∂s² = L (Λ″ + Λ′²)`.
pub fn grad2_s_real(x: &[f64], w: &[f64], s: f64) -> Result<f64> {
    let log = log_lehmer(x, w, s)?;
    Ok(log.value.exp() * (log.second + log.first * log.first))
}

/// Unit-weight s-derivative written as a sum over ordered pairs:
///
/// `Σᵢ Σ_{j>i} (xᵢ − xⱼ)(xᵢxⱼ)ˢ⁻¹ ln(xᵢ/xⱼ) / (Σ xᵢˢ⁻¹)²`.
///
/// Independent of the moment formulation; kept as a cross-check.
pub fn grad_s_pairwise_unweighted(x: &[f64], s: f64) -> Result<f64> {
    check_pair(x, &vec![1.0; x.len()])?;
    check_finite("s", s)?;
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    // (x_i x_j)^{s-1} / (Σ x^{s-1})^2 with the largest term of Σ factored out
    let shift = log_x.iter().fold(f64::NEG_INFINITY, |m, &l| m.max((s - 1.0) * l));
    let scaled: Vec<f64> = log_x.iter().map(|&l| ((s - 1.0) * l - shift).exp()).collect();
    let denom: f64 = scaled.iter().sum();
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            total += (x[i] - x[j]) * scaled[i] * scaled[j] * (log_x[i] - log_x[j]);
        }
    }
    Ok(total / (denom * denom))
}

/// `∂L/∂wₖ` for every k.
pub fn grad_w_real(x: &[f64], w: &[f64], s: f64) -> Result<Vec<f64>> {
    Ok(lehmer_real_with_grad(x, w, s)?.1.d_w)
}

/// `∂L/∂xₖ` for every k.
pub fn grad_x_real(x: &[f64], w: &[f64], s: f64) -> Result<Vec<f64>> {
    Ok(lehmer_real_with_grad(x, w, s)?.1.d_x)
}

/// Value and all real partials of the complex transform.
pub fn lehmer_complex_with_grad(
    x: &[f64],
    w: &[f64],
    s: SuddencyComplex,
) -> Result<(ComplexLehmer, ComplexGradients)> {
    check_pair(x, w)?;
    check_finite("a", s.a)?;
    check_finite("b", s.b)?;
    let n = x.len();
    let zero = Complex::new(0.0, 0.0);
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (mut r, mut phase) = (vec![0.0; n], vec![zero; n]);
    let fwd = kernel::complex_forward(x, &log_x, w, s.a, s.b, &mut r, &mut phase);
    let (mut d_w, mut d_x) = (vec![zero; n], vec![zero; n]);
    let d_a = kernel::complex_backward(x, &log_x, w, s.as_complex(), &r, &phase, &fwd, |k, dw, dx| {
        d_w[k] = dw;
        d_x[k] = dx;
    });
    let result = ComplexLehmer::from(fwd);
    let grads = ComplexGradients { d_a, d_b: Complex::i() * d_a, d_w, d_x, near_singular: result.near_singular };
    Ok((result, grads))
}

pub fn grad_complex(x: &[f64], w: &[f64], s: SuddencyComplex) -> Result<ComplexGradients> {
    Ok(lehmer_complex_with_grad(x, w, s)?.1)
}

/// Partials of `relau(z, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReLAUGradients {
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_gamma: f64,
    /// `(∂/∂Re z, ∂/∂Im z)`.
    pub d_z: Complex,
}

pub fn grad_relau(z: Complex, p: ReLAUParams) -> ReLAUGradients {
    ReLAUGradients { d_alpha: z.re, d_beta: z.im, d_gamma: 1.0, d_z: Complex::new(p.alpha, p.beta) }
}

/// `d softplus(vᵢ) / dvᵢ`.
pub fn grad_softplus(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&vi| crate::lehmer::sigmoid(vi)).collect()
}

/// Central differences `(f(p + h eᵢ) − f(p − h eᵢ)) / 2h` for each coordinate.
pub fn finite_diff_check<F, E>(mut f: F, params: &[f64], h: f64) -> std::result::Result<Vec<f64>, E>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
{
    let mut p = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = p[i];
        p[i] = orig + h;
        let plus = f(&p)?;
        p[i] = orig - h;
        let minus = f(&p)?;
        p[i] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

/// Second-order central difference `(f(p+h) − 2f(p) + f(p−h)) / h²` of a scalar function.
pub fn finite_diff_second<F, E>(mut f: F, at: f64, h: f64) -> std::result::Result<f64, E>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    Ok((f(at + h)? - 2.0 * f(at)? + f(at - h)?) / (h * h))
}

/// Sum `Σₖ wₖ ∂L/∂wₖ`; zero for every valid input.
pub fn weight_euler_residual(x: &[f64], w: &[f64], s: f64) -> Result<f64> {
    let g = grad_w_real(x, w, s)?;
    Ok(w.iter().zip(&g).map(|(a, b)| a * b).sum())
}

/// Relative residual of `Σₖ xₖ ∂L/∂xₖ = L`.
pub fn input_euler_residual(x: &[f64], w: &[f64], s: f64) -> Result<f64> {
    let g = grad_x_real(x, w, s)?;
    let value = lehmer_real(x, w, s)?;
    let sum: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
    Ok((sum - value).abs() / value.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lehmer::{lehmer_complex, relau, softplus};
    use std::f64::consts::E;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-8)
    }

    #[test]
    fn constant_input_has_zero_s_gradient() {
        assert_eq!(grad_s_real(&[1.3, 1.3], &[0.2, 5.0], -3.0).unwrap(), 0.0);
        assert!(grad2_s_real(&[1.3, 1.3, 1.3], &[1.0; 3], 2.0).unwrap().abs() < 1e-14);
        assert!(grad_w_real(&[0.7; 3], &[1.0, 2.0, 3.0], 1.5).unwrap().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn hand_evaluated_s_gradient() {
        // (1+e)/2 · (e/(1+e) − 1/2), cross-checked in numpy by central difference
        let g = grad_s_real(&[1.0, E], &[1.0, 1.0], 1.0).unwrap();
        assert!((g - 0.429_570_457).abs() < 1e-8, "{g}");
    }

    #[test]
    fn s_gradient_matches_finite_difference() {
        let x = [0.5, 1.2, 2.4, 0.9];
        let w = [1.0, 0.3, 2.0, 0.8];
        for s in [-3.0, 0.0, 0.7, 4.0] {
            let fd = finite_diff_check(|p| lehmer_real(&x, &w, p[0]), &[s], 1e-5).unwrap()[0];
            let g = grad_s_real(&x, &w, s).unwrap();
            assert!(rel_err(g, fd) < 1e-6, "s={s}: {g} vs {fd}");
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let x = [1.0, 2.0, 3.0];
        let w = [1.0; 3];
        let g2 = grad2_s_real(&x, &w, 1.0).unwrap();
        let fd2 = finite_diff_second(|s| lehmer_real(&x, &w, s), 1.0, 1e-3).unwrap();
        assert!(rel_err(g2, fd2) < 1e-4, "{g2} vs {fd2}");
        let fd_of_grad = finite_diff_check(|p| grad_s_real(&x, &w, p[0]), &[1.0], 1e-5).unwrap()[0];
        assert!(rel_err(g2, fd_of_grad) < 1e-5, "{g2} vs {fd_of_grad}");
        // numpy: −0.0351168 at s = 1
        assert!((g2 + 0.035_116_8).abs() < 1e-6);
    }

    #[test]
    fn pairwise_formula() {
        assert_eq!(grad_s_pairwise_unweighted(&[2.0], 0.3).unwrap(), 0.0);
        let a = grad_s_pairwise_unweighted(&[1.0, 2.0], 1.0).unwrap();
        let b = grad_s_real(&[1.0, 2.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(grad_s_pairwise_unweighted(&[0.4, 0.41, 2.0], -2.0).unwrap() > 0.0);
    }

    #[test]
    fn weight_gradient_hand_value() {
        let g = grad_w_real(&[1.0, 2.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((g[0] + 0.25).abs() < 1e-15 && (g[1] - 0.25).abs() < 1e-15, "{g:?}");
    }

    #[test]
    fn input_gradient_of_arithmetic_mean() {
        let g = grad_x_real(&[0.5, 1.0, 2.0, 4.0], &[1.0; 4], 1.0).unwrap();
        assert!(g.iter().all(|v| (v - 0.25).abs() < 1e-15), "{g:?}");
    }

    #[test]
    fn euler_identities() {
        let x = [0.4, 2.2, 1.1, 0.9];
        let w = [0.5, 1.5, 0.2, 3.0];
        for s in [-4.0, 0.0, 1.0, 2.5] {
            assert!(weight_euler_residual(&x, &w, s).unwrap().abs() < 1e-10);
            assert!(input_euler_residual(&x, &w, s).unwrap() < 1e-10);
        }
    }

    #[test]
    fn complex_gradient_collapses_at_b_zero() {
        let x = [0.5, 1.6, 2.3];
        let w = [1.0, 0.4, 2.0];
        let g = grad_complex(&x, &w, SuddencyComplex::new(0.8, 0.0)).unwrap();
        let real = lehmer_real_with_grad(&x, &w, 0.8).unwrap().1;
        assert!((g.d_a.re - real.d_s).abs() < 1e-10);
        assert!(g.d_a.im.abs() < 1e-10);
        for k in 0..3 {
            assert!((g.d_w[k].re - real.d_w[k]).abs() < 1e-12);
            assert!((g.d_x[k].re - real.d_x[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_gradient_constant_input() {
        let g = grad_complex(&[1.4; 3], &[1.0, 2.0, 0.5], SuddencyComplex::new(-1.0, 2.5)).unwrap();
        assert!(g.d_a.norm() < 1e-13 && g.d_b.norm() < 1e-13);
        assert!(g.d_w.iter().all(|d| d.norm() < 1e-13));
    }

    #[test]
    fn complex_gradient_matches_finite_difference() {
        let x = [0.45, 1.3, 2.6, 0.8];
        let w = [1.2, 0.6, 0.9, 2.0];
        let s = SuddencyComplex::new(0.6, -1.4);
        let g = grad_complex(&x, &w, s).unwrap();
        let h = 1e-5;
        for part in [0usize, 1] {
            let pick = |z: Complex| if part == 0 { z.re } else { z.im };
            let fd_a = finite_diff_check(
                |p| lehmer_complex(&x, &w, SuddencyComplex::new(p[0], s.b)).map(|r| pick(r.value)),
                &[s.a],
                h,
            )
            .unwrap()[0];
            let fd_b = finite_diff_check(
                |p| lehmer_complex(&x, &w, SuddencyComplex::new(s.a, p[0])).map(|r| pick(r.value)),
                &[s.b],
                h,
            )
            .unwrap()[0];
            assert!((pick(g.d_a) - fd_a).abs() < 1e-8, "a part {part}");
            assert!((pick(g.d_b) - fd_b).abs() < 1e-8, "b part {part}");
            let fd_w = finite_diff_check(|p| lehmer_complex(&x, p, s).map(|r| pick(r.value)), &w, h).unwrap();
            let fd_x = finite_diff_check(|p| lehmer_complex(p, &w, s).map(|r| pick(r.value)), &x, h).unwrap();
            for k in 0..4 {
                assert!((pick(g.d_w[k]) - fd_w[k]).abs() < 1e-8);
                assert!((pick(g.d_x[k]) - fd_x[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reported_wirtinger_sum_vanishes() {
        let g = grad_complex(&[0.5, 2.0], &[1.0, 1.0], SuddencyComplex::new(1.0, 0.7)).unwrap();
        assert!(g.reported_ds().norm() < 1e-14);
        assert!(g.holomorphic_derivative().norm() > 0.1);
    }

    #[test]
    fn relau_gradients() {
        let g = grad_relau(Complex::new(2.0, 3.0), ReLAUParams { alpha: -0.5, beta: 0.25, gamma: 7.0 });
        assert_eq!((g.d_alpha, g.d_beta, g.d_gamma), (2.0, 3.0, 1.0));
        let g = grad_relau(Complex::new(0.1, 0.2), ReLAUParams::default());
        assert_eq!(g.d_z, Complex::new(1.0, 0.0));
        let p = ReLAUParams { alpha: 0.3, beta: -1.1, gamma: 0.4 };
        let z = Complex::new(1.7, -0.6);
        let fd = finite_diff_check::<_, ()>(
            |q| Ok(relau(z, ReLAUParams { alpha: q[0], beta: q[1], gamma: q[2] })),
            &[p.alpha, p.beta, p.gamma],
            1e-5,
        )
        .unwrap();
        let g = grad_relau(z, p);
        assert!((fd[0] - g.d_alpha).abs() < 1e-8);
        assert!((fd[1] - g.d_beta).abs() < 1e-8);
        assert!((fd[2] - g.d_gamma).abs() < 1e-8);
    }

    #[test]
    fn softplus_gradient() {
        assert_eq!(grad_softplus(&[0.0]), vec![0.5]);
        assert!((grad_softplus(&[40.0])[0] - 1.0).abs() < 1e-12);
        for v in [-12.0, -1.3, 0.2, 3.7, 25.0] {
            let fd = finite_diff_check::<_, ()>(|p| Ok(softplus(p[0])), &[v], 1e-5).unwrap()[0];
            let g = grad_softplus(&[v])[0];
            assert!(rel_err(g, fd) < 1e-7, "v={v}");
        }
    }

    #[test]
    fn finite_diff_basics() {
        let d = finite_diff_check::<_, ()>(|p| Ok(p[0] * p[0]), &[3.0], 1e-5).unwrap();
        assert!((d[0] - 6.0).abs() < 1e-8);
        let d = finite_diff_check::<_, ()>(|_| Ok(4.2), &[1.0, -2.0, 9.0], 1e-5).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-10));
    }
}
