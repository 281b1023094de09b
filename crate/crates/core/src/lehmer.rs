//! Real and complex weighted Lehmer transforms and the scalar maps that feed them.
//!
//! For positive inputs `x` and positive weights `w` the weighted transform is
//!
//! ```text
//! L(s; x, w) = Σ wᵢ xᵢˢ / Σ wᵢ xᵢˢ⁻¹
//! ```
//!
//! It interpolates between the weighted harmonic (`s = 0`), arithmetic
//! (`s = 1`) and contra-harmonic (`s = 2`) means and tends to `min(x)` /
//! `max(x)` as `s → ∓∞`. With a complex exponent `s = a + ib` each term picks
//! up the phase `b·ln xᵢ`.
//!
//! Powers are evaluated as `exp(s·ln x)` with the largest exponent factored
//! out of each sum, so the ratio stays finite for any `|s|` for which the
//! final value is representable.

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Complex = Complex64;

/// Lower end of the standardized input range, `e⁻¹`.
pub const RANGE_LO: f64 = 0.367_879_441_171_442_33;
/// Upper end of the standardized input range, `e`.
pub const RANGE_HI: f64 = std::f64::consts::E;

/// Regularizer for the complex denominator. Applied to the denominator after
/// normalizing it by the sum of its term magnitudes, so `|D̃| ∈ [0, 1]`
/// measures how much the phased terms cancel.
pub const COMPLEX_DENOM_EPS: f64 = 1e-12;

/// Above this magnitude softplus switches to its asymptotic branches.
pub const SOFTPLUS_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LehmerError {
    #[error("empty input vector")]
    Empty,
    #[error("length mismatch: {inputs} inputs but {weights} weights")]
    LengthMismatch { inputs: usize, weights: usize },
    #[error("input {index} is {value}, inputs must be finite and strictly positive")]
    NonPositiveInput { index: usize, value: f64 },
    #[error("weight {index} is {value}, weights must be finite and strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("non-finite parameter {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("feature count mismatch: fitted on {expected}, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
}

pub type Result<T, E = LehmerError> = std::result::Result<T, E>;

/// A vector of strictly positive, finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveVector(Vec<f64>);

impl PositiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LehmerError::Empty);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(LehmerError::NonPositiveInput { index, value });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Strictly positive weights paired with a [`PositiveVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LehmerError::Empty);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(LehmerError::NonPositiveWeight { index, value });
        }
        Ok(Self(values))
    }

    /// Unit weights of length `n`.
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Real suddency moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuddencyReal(pub f64);

/// Complex suddency moment `a + ib`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuddencyComplex {
    pub a: f64,
    pub b: f64,
}

impl SuddencyComplex {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn as_complex(self) -> Complex {
        Complex::new(self.a, self.b)
    }
}

/// Trainable affine read-out of a complex activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReLAUParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for ReLAUParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.0, gamma: 0.0 }
    }
}

/// Result of a complex transform together with its interference diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexLehmer {
    pub value: Complex,
    /// `|D̃|`, the denominator magnitude relative to the sum of its term
    /// magnitudes. Values near zero mean destructive interference.
    pub denom_ratio: f64,
    /// Set when `denom_ratio < COMPLEX_DENOM_EPS`; the value is then
    /// dominated by the regularizer.
    pub near_singular: bool,
}

pub(crate) fn check_pair(x: &[f64], w: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(LehmerError::Empty);
    }
    if x.len() != w.len() {
        return Err(LehmerError::LengthMismatch { inputs: x.len(), weights: w.len() });
    }
    for (index, &value) in x.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(LehmerError::NonPositiveInput { index, value });
        }
    }
    for (index, &value) in w.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(LehmerError::NonPositiveWeight { index, value });
        }
    }
    Ok(())
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(LehmerError::NonFinite { name, value })
    }
}

fn max_scaled(log_x: &[f64], s: f64) -> f64 {
    log_x.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(s * l))
}

/// Shifted moment sums of the real transform at exponent `s`.
///
/// `num_terms[i] = wᵢ·exp(s·ln xᵢ − shift_num)` and
/// `den_terms[i] = wᵢ·exp((s−1)·ln xᵢ − shift_den)`, with each shift the
/// largest exponent so no term overflows.
#[derive(Debug, Clone)]
pub(crate) struct RealMoments {
    pub log_x: Vec<f64>,
    pub num_terms: Vec<f64>,
    pub den_terms: Vec<f64>,
    pub num_sum: f64,
    pub den_sum: f64,
}

impl RealMoments {
    pub fn new(x: &[f64], w: &[f64], s: f64) -> Self {
        let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        Self::from_logs(log_x, w, s)
    }

    pub fn from_logs(log_x: Vec<f64>, w: &[f64], s: f64) -> Self {
        let shift_num = max_scaled(&log_x, s);
        let shift_den = max_scaled(&log_x, s - 1.0);
        let num_terms: Vec<f64> =
            log_x.iter().zip(w).map(|(&l, &wi)| wi * (s * l - shift_num).exp()).collect();
        let den_terms: Vec<f64> = log_x
            .iter()
            .zip(w)
            .map(|(&l, &wi)| wi * ((s - 1.0) * l - shift_den).exp())
            .collect();
        let num_sum = num_terms.iter().sum();
        let den_sum = den_terms.iter().sum();
        Self { log_x, num_terms, den_terms, num_sum, den_sum }
    }

    /// `L` as the mean of `x` under weights ∝ `w xˢ⁻¹`, which is exact for
    /// constant inputs and stays inside `[min x, max x]`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mean = self.den_terms.iter().zip(x).map(|(t, v)| t * v).sum::<f64>() / self.den_sum;
        mean.clamp(min(x), max(x))
    }

    /// Weighted mean of `ln x − ln x₀` under weights ∝ `w xˢ`. Centering on
    /// the first element makes the result exactly zero for constant inputs.
    pub fn log_mean_num(&self) -> f64 {
        weighted_mean(&self.num_terms, self.num_sum, &self.log_x)
    }

    /// Weighted mean of `ln x − ln x₀` under weights ∝ `w xˢ⁻¹`.
    pub fn log_mean_den(&self) -> f64 {
        weighted_mean(&self.den_terms, self.den_sum, &self.log_x)
    }

    pub fn log_var_num(&self) -> f64 {
        weighted_var(&self.num_terms, self.num_sum, &self.log_x)
    }

    pub fn log_var_den(&self) -> f64 {
        weighted_var(&self.den_terms, self.den_sum, &self.log_x)
    }
}

fn min(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn weighted_mean(terms: &[f64], total: f64, values: &[f64]) -> f64 {
    let origin = values[0];
    terms.iter().zip(values).map(|(t, v)| t * (v - origin)).sum::<f64>() / total
}

fn weighted_var(terms: &[f64], total: f64, values: &[f64]) -> f64 {
    let mean = weighted_mean(terms, total, values) + values[0];
    terms.iter().zip(values).map(|(t, v)| t * (v - mean) * (v - mean)).sum::<f64>() / total
}

/// Weighted Lehmer transform `Σ wᵢxᵢˢ / Σ wᵢxᵢˢ⁻¹`.
pub fn lehmer_real(x: &[f64], w: &[f64], s: f64) -> Result<f64> {
    check_pair(x, w)?;
    check_finite("s", s)?;
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    Ok(crate::kernel::real_forward(x, &log_x, w, s, &mut vec![0.0; x.len()]))
}

/// Typed wrapper over [`lehmer_real`].
pub fn lehmer(x: &PositiveVector, w: &WeightVector, s: SuddencyReal) -> Result<f64> {
    lehmer_real(x.as_slice(), w.as_slice(), s.0)
}

impl From<crate::kernel::ComplexForward> for ComplexLehmer {
    fn from(f: crate::kernel::ComplexForward) -> Self {
        Self { value: f.value, denom_ratio: f.denom_ratio, near_singular: f.denom_ratio < COMPLEX_DENOM_EPS }
    }
}

/// Complex weighted Lehmer transform with suddency `a + ib`.
///
/// Returns the value along with a flag for near-singular denominators;
/// callers decide whether a flagged value is acceptable.
pub fn lehmer_complex(x: &[f64], w: &[f64], s: SuddencyComplex) -> Result<ComplexLehmer> {
    check_pair(x, w)?;
    check_finite("a", s.a)?;
    check_finite("b", s.b)?;
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (mut r, mut phase) = (vec![0.0; x.len()], vec![Complex::new(0.0, 0.0); x.len()]);
    Ok(ComplexLehmer::from(crate::kernel::complex_forward(x, &log_x, w, s.a, s.b, &mut r, &mut phase)))
}

/// Evaluates the complex transform twice, once with complex exponentials
/// `exp((a + ib)·ln x)` and once with the explicit `xᵃ(cos(b ln x) + i sin(b ln x))`
/// expansion, and returns the larger of the real/imaginary discrepancies.
pub fn euler_form_equivalence_check(x: &[f64], w: &[f64], s: SuddencyComplex) -> Result<f64> {
    check_pair(x, w)?;
    check_finite("a", s.a)?;
    check_finite("b", s.b)?;
    let exponent = s.as_complex();
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let shift_num = max_scaled(&log_x, s.a);
    let shift_den = max_scaled(&log_x, s.a - 1.0);

    let mut num_exp = Complex::new(0.0, 0.0);
    let mut den_exp = Complex::new(0.0, 0.0);
    let mut num_trig = Complex::new(0.0, 0.0);
    let mut den_trig = Complex::new(0.0, 0.0);
    for (&l, &wi) in log_x.iter().zip(w) {
        num_exp += (exponent * l - shift_num).exp() * wi;
        den_exp += ((exponent - 1.0) * l - shift_den).exp() * wi;
        let (sin, cos) = (s.b * l).sin_cos();
        let mag_num = wi * (s.a * l - shift_num).exp();
        let mag_den = wi * ((s.a - 1.0) * l - shift_den).exp();
        num_trig += Complex::new(mag_num * cos, mag_num * sin);
        den_trig += Complex::new(mag_den * cos, mag_den * sin);
    }
    let scale = (shift_num - shift_den).exp();
    let via_exp = num_exp / den_exp * scale;
    let via_trig = num_trig / den_trig * scale;
    let diff = via_exp - via_trig;
    Ok(diff.re.abs().max(diff.im.abs()))
}

/// `α·Re z + β·Im z + γ`.
pub fn relau(z: Complex, p: ReLAUParams) -> f64 {
    p.alpha * z.re + p.beta * z.im + p.gamma
}

/// Numerically stable `ln(1 + eᵛ)`.
pub fn softplus(v: f64) -> f64 {
    if v > SOFTPLUS_THRESHOLD {
        v + (-v).exp()
    } else if v < -SOFTPLUS_THRESHOLD {
        v.exp()
    } else {
        v.exp().ln_1p()
    }
}

/// Inverse of [`softplus`], `ln(eʷ − 1)` for `w > 0`.
pub fn softplus_inverse(w: f64) -> f64 {
    if w > SOFTPLUS_THRESHOLD {
        w + (-(-w).exp()).ln_1p()
    } else {
        w.exp_m1().ln()
    }
}

/// Maps unconstrained pre-activations to strictly positive weights.
pub fn softplus_weights(v: &[f64]) -> WeightVector {
    WeightVector(v.iter().map(|&vi| softplus(vi).max(f64::MIN_POSITIVE)).collect())
}

/// Logistic sigmoid, the derivative of [`softplus`].
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `exp(tanh z)`: a smooth, increasing bijection of ℝ onto `(e⁻¹, e)`.
///
/// `tanh` rounds to ±1 for `|z| ≳ 19`; the result is then kept one ulp
/// inside the interval.
pub fn squash_to_lehmer_range(z: f64) -> f64 {
    z.tanh().exp().clamp(RANGE_LO.next_up(), RANGE_HI.next_down())
}

/// Derivative of [`squash_to_lehmer_range`].
pub fn squash_derivative(z: f64) -> f64 {
    let t = z.tanh();
    t.exp() * (1.0 - t * t)
}

/// Per-feature `(min, max)` collected from training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl RangeStats {
    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    /// Maps one row into `[e⁻¹, e]`.
    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) -> Result<()> {
        if row.len() != self.n_features() || out.len() != row.len() {
            return Err(LehmerError::FeatureMismatch { expected: self.n_features(), got: row.len() });
        }
        for (j, (&v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            *o = if hi > lo {
                let t = (v - lo) / (hi - lo);
                (RANGE_LO + (RANGE_HI - RANGE_LO) * t).clamp(RANGE_LO, RANGE_HI)
            } else {
                // log-space midpoint of the target range
                1.0
            };
        }
        Ok(())
    }
}

/// Collects per-feature min and max over the rows of a row-major matrix.
///
/// Panics if `rows` is empty or if `data.len()` is not a multiple of `n_features`.
pub fn standardize_fit<'a, I>(rows: I) -> RangeStats
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = rows.into_iter();
    let first = iter.next().expect("standardize_fit needs at least one row");
    let mut min = first.to_vec();
    let mut max = first.to_vec();
    for row in iter {
        assert_eq!(row.len(), min.len(), "ragged feature matrix");
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    RangeStats { min, max }
}

/// Standardizes a row-major matrix with `stats.n_features()` columns.
pub fn standardize_apply(stats: &RangeStats, data: &[f64]) -> Result<Vec<f64>> {
    let n = stats.n_features();
    if n == 0 || data.len() % n != 0 {
        return Err(LehmerError::FeatureMismatch { expected: n, got: data.len() });
    }
    let mut out = vec![0.0; data.len()];
    for (row, dst) in data.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        stats.apply_row(row, dst)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn constant_vector_is_fixed_point() {
        for s in [-7.0, 0.0, 0.5, 3.0, 40.0] {
            let v = lehmer_real(&[2.5, 2.5, 2.5], &[0.1, 3.0, 1.0], s).unwrap();
            assert!(close(v, 2.5, 1e-14), "s={s}: {v}");
        }
    }

    #[test]
    fn hand_evaluated_values() {
        assert!(close(lehmer_real(&[1.0, 2.0, 3.0], &[1.0; 3], 2.0).unwrap(), 14.0 / 6.0, 1e-14));
        assert!(close(lehmer_real(&[2.0, 4.0], &[3.0, 1.0], 1.0).unwrap(), 2.5, 1e-14));
        // harmonic mean 3 / (1 + 1/2 + 1/4)
        assert!(close(lehmer_real(&[1.0, 2.0, 4.0], &[1.0; 3], 0.0).unwrap(), 12.0 / 7.0, 1e-14));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(lehmer_real(&[], &[], 1.0), Err(LehmerError::Empty));
        assert!(matches!(
            lehmer_real(&[1.0, 0.0], &[1.0, 1.0], 1.0),
            Err(LehmerError::NonPositiveInput { index: 1, .. })
        ));
        assert!(matches!(
            lehmer_real(&[1.0, 2.0], &[-1.0, 1.0], 1.0),
            Err(LehmerError::NonPositiveWeight { index: 0, .. })
        ));
        assert!(matches!(
            lehmer_real(&[1.0], &[1.0, 1.0], 1.0),
            Err(LehmerError::LengthMismatch { .. })
        ));
        assert!(matches!(lehmer_real(&[1.0], &[1.0], f64::NAN), Err(LehmerError::NonFinite { .. })));
        assert!(PositiveVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn large_exponents_stay_finite() {
        let x = [0.5, 1.0, 3.0];
        let v = lehmer_real(&x, &[1.0; 3], 600.0).unwrap();
        assert!(close(v, 3.0, 1e-12));
        let v = lehmer_real(&x, &[1.0; 3], -600.0).unwrap();
        assert!(close(v, 0.5, 1e-12));
    }

    #[test]
    fn complex_collapses_to_real_when_b_is_zero() {
        let x = [0.4, 1.3, 2.2];
        let w = [0.7, 1.0, 2.0];
        let z = lehmer_complex(&x, &w, SuddencyComplex::new(1.7, 0.0)).unwrap();
        assert_eq!(z.value.im, 0.0);
        assert!(close(z.value.re, lehmer_real(&x, &w, 1.7).unwrap(), 1e-13));
        assert!(!z.near_singular);
    }

    #[test]
    fn complex_constant_input() {
        let z = lehmer_complex(&[1.7; 4], &[1.0, 2.0, 3.0, 4.0], SuddencyComplex::new(-2.0, 3.3)).unwrap();
        assert!(close(z.value.re, 1.7, 1e-13));
        assert!(z.value.im.abs() < 1e-13);
    }

    #[test]
    fn complex_hand_value() {
        // (1 + e^i) / (1 + e^{-1} e^i), evaluated with numpy
        let z = lehmer_complex(&[1.0, E], &[1.0, 1.0], SuddencyComplex::new(0.0, 1.0)).unwrap();
        assert!((z.value.re - 1.374_514_008_539_503).abs() < 1e-12);
        assert!((z.value.im - 0.347_003_969_874_273_8).abs() < 1e-12);
    }

    #[test]
    fn complex_flags_destructive_interference() {
        // two equal-magnitude denominator terms with opposite phases:
        // x = [1, e], a = 1 gives magnitudes w·x^0 = [1, 1]; b = π puts them at 0 and π.
        let z = lehmer_complex(&[1.0, E], &[1.0, 1.0], SuddencyComplex::new(1.0, std::f64::consts::PI))
            .unwrap();
        assert!(z.near_singular, "ratio {}", z.denom_ratio);
        assert!(z.value.re.is_finite() && z.value.im.is_finite());
    }

    #[test]
    fn euler_forms_agree() {
        let d = euler_form_equivalence_check(&[1.0, 2.0], &[1.0, 1.0], SuddencyComplex::new(1.0, 0.5)).unwrap();
        assert!(d <= 1e-12);
        let d = euler_form_equivalence_check(&[1.0 / E, 1.0, E], &[2.0, 1.0, 3.0], SuddencyComplex::new(0.3, 2.0))
            .unwrap();
        assert!(d <= 1e-12);
        let d = euler_form_equivalence_check(&[3.1], &[1.0], SuddencyComplex::new(-4.0, 9.0)).unwrap();
        assert!(d <= 1e-15);
    }

    #[test]
    fn relau_projections() {
        let z = Complex::new(-0.3, 1.9);
        assert_eq!(relau(z, ReLAUParams { alpha: 1.0, beta: 0.0, gamma: 0.0 }), -0.3);
        assert_eq!(relau(z, ReLAUParams { alpha: 0.0, beta: 1.0, gamma: 0.0 }), 1.9);
        let v = relau(Complex::new(2.0, 3.0), ReLAUParams { alpha: 0.5, beta: -1.0, gamma: 4.0 });
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_values() {
        assert!((softplus_weights(&[0.0]).as_slice()[0] - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(40.0) - 40.0).abs() < 1e-12);
        assert!((softplus((E - 1.0).ln()) - 1.0).abs() < 1e-12);
        assert!(softplus(-800.0) > 0.0 || softplus_weights(&[-800.0]).as_slice()[0] > 0.0);
        assert!(softplus_weights(&[-800.0]).as_slice()[0] > 0.0);
        for w in [1e-6, 0.3, 1.0, 7.0, 45.0] {
            assert!(close(softplus(softplus_inverse(w)), w, 1e-12), "w={w}");
        }
    }

    #[test]
    fn softplus_branches_are_continuous() {
        for edge in [SOFTPLUS_THRESHOLD, -SOFTPLUS_THRESHOLD] {
            let lo = softplus(edge - 1e-9);
            let hi = softplus(edge + 1e-9);
            assert!((lo - hi).abs() < 1e-8 * lo.max(1e-13) + 1e-20);
        }
    }

    #[test]
    fn squash_values() {
        assert_eq!(squash_to_lehmer_range(0.0), 1.0);
        // exp(tanh 1)
        assert!((squash_to_lehmer_range(1.0) - 2.141_687_684_749_35).abs() < 1e-12);
        assert!(squash_to_lehmer_range(1e3) < E);
        assert!(squash_to_lehmer_range(-1e3) > 1.0 / E);
        assert!(squash_to_lehmer_range(10.0) < E);
    }

    #[test]
    fn standardize_examples() {
        let single = [3.0, -1.0];
        let stats = standardize_fit([&single[..]]);
        assert_eq!(stats.min, vec![3.0, -1.0]);
        assert_eq!(stats.max, vec![3.0, -1.0]);

        let col: Vec<[f64; 1]> = vec![[0.0], [5.0], [10.0]];
        let stats = standardize_fit(col.iter().map(|r| &r[..]));
        assert_eq!((stats.min[0], stats.max[0]), (0.0, 10.0));

        let rows = [[1.0, -2.0], [3.0, 4.0]];
        let stats = standardize_fit(rows.iter().map(|r| &r[..]));
        assert_eq!(stats.min, vec![1.0, -2.0]);
        assert_eq!(stats.max, vec![3.0, 4.0]);

        let out = standardize_apply(&stats, &[1.0, 4.0, 3.0, -2.0, 100.0, -100.0]).unwrap();
        assert!((out[0] - RANGE_LO).abs() < 1e-15);
        assert!((out[1] - RANGE_HI).abs() < 1e-15);
        assert!((out[2] - RANGE_HI).abs() < 1e-15);
        assert!((out[3] - RANGE_LO).abs() < 1e-15);
        assert_eq!(out[4], RANGE_HI);
        assert_eq!(out[5], RANGE_LO);
    }

    #[test]
    fn standardize_degenerate_feature() {
        let rows = [[2.0, 1.0], [2.0, 5.0]];
        let stats = standardize_fit(rows.iter().map(|r| &r[..]));
        let out = standardize_apply(&stats, &[2.0, 3.0, -9.0, 3.0]).unwrap();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[2], 1.0);
        assert!(standardize_apply(&stats, &[1.0, 2.0, 3.0]).is_err());
    }
}
