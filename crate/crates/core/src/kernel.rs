//! Allocation-free evaluation of the transforms and their gradients, shared
//! by the scalar API and the LAU layers.
//!
//! Both transforms are written through `rₖ = eₖ / Σᵢ wᵢeᵢ` with
//! `eₖ = exp((a−1)·ln xₖ − shift)`, so `wₖrₖ` are the normalized weights of
//! `w xˢ⁻¹` and `L` is the `w r`-weighted mean of `x` (times a phase factor
//! in the complex case). Only one exponential per element is needed for the
//! value and every gradient.

use crate::lehmer::{Complex, COMPLEX_DENOM_EPS};

fn shift(log_x: &[f64], e: f64) -> f64 {
    log_x.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(e * l))
}

/// Writes `r` and returns `L = Σ wₖeₖxₖ / Σ wₖeₖ`, clamped into
/// `[min x, max x]` against rounding.
pub(crate) fn real_forward(x: &[f64], log_x: &[f64], w: &[f64], s: f64, r: &mut [f64]) -> f64 {
    let e = s - 1.0;
    let m = shift(log_x, e);
    let (mut den, mut num) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..x.len() {
        let ek = (e * log_x[k] - m).exp();
        r[k] = ek;
        let t = w[k] * ek;
        den += t;
        num += t * x[k];
        lo = lo.min(x[k]);
        hi = hi.max(x[k]);
    }
    for rk in r.iter_mut() {
        *rk /= den;
    }
    (num / den).clamp(lo, hi)
}

/// Calls `emit(k, ∂L/∂wₖ, ∂L/∂xₖ)` for each k and returns `∂L/∂s ≥ 0`.
///
/// `ln x` is centered on `ln x₀` for the s-derivative, which makes it exactly
/// zero for constant inputs.
#[inline]
pub(crate) fn real_backward(
    x: &[f64],
    log_x: &[f64],
    w: &[f64],
    s: f64,
    r: &[f64],
    value: f64,
    mut emit: impl FnMut(usize, f64, f64),
) -> f64 {
    let origin = log_x[0];
    let mut d_s = 0.0;
    for k in 0..x.len() {
        let spread = r[k] * (x[k] - value);
        d_s += w[k] * spread * (log_x[k] - origin);
        emit(k, spread, w[k] * r[k] * (s - (s - 1.0) * value / x[k]));
    }
    d_s.max(0.0)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ComplexForward {
    pub value: Complex,
    /// `|D̃|` with `D̃ = Σ wₖrₖφₖ`, at most 1.
    pub denom_ratio: f64,
    /// `conj(D̃) / (|D̃|² + ε²)`.
    pub inv: Complex,
}

/// Writes `r` and the phases `φₖ = e^{ib ln xₖ}`, returns
/// `L = (Σ wₖrₖxₖφₖ)·conj(D̃)/(|D̃|² + ε²)`.
pub(crate) fn complex_forward(
    x: &[f64],
    log_x: &[f64],
    w: &[f64],
    a: f64,
    b: f64,
    r: &mut [f64],
    phase: &mut [Complex],
) -> ComplexForward {
    let e = a - 1.0;
    let m = shift(log_x, e);
    let mut den = 0.0;
    let mut d = Complex::new(0.0, 0.0);
    let mut n = Complex::new(0.0, 0.0);
    for k in 0..x.len() {
        let ek = (e * log_x[k] - m).exp();
        let (sin, cos) = (b * log_x[k]).sin_cos();
        let p = Complex::new(cos, sin);
        r[k] = ek;
        phase[k] = p;
        let t = w[k] * ek;
        den += t;
        d += p * t;
        n += p * (t * x[k]);
    }
    for rk in r.iter_mut() {
        *rk /= den;
    }
    let (d, n) = (d / den, n / den);
    let inv = d.conj() / (d.norm_sqr() + COMPLEX_DENOM_EPS * COMPLEX_DENOM_EPS);
    ComplexForward { value: n * inv, denom_ratio: d.norm(), inv }
}

/// Calls `emit(k, ∂L/∂wₖ, ∂L/∂xₖ)` and returns `dL/ds = ∂L/∂a`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn complex_backward(
    x: &[f64],
    log_x: &[f64],
    w: &[f64],
    s: Complex,
    r: &[f64],
    phase: &[Complex],
    fwd: &ComplexForward,
    mut emit: impl FnMut(usize, Complex, Complex),
) -> Complex {
    let value = fwd.value;
    let mut d_s = Complex::new(0.0, 0.0);
    for k in 0..x.len() {
        let base = phase[k] * (r[k]) * fwd.inv;
        let spread = base * (x[k] - value);
        d_s += spread * (w[k] * log_x[k]);
        emit(k, spread, base * w[k] * (s - (s - 1.0) * value / x[k]));
    }
    d_s
}
