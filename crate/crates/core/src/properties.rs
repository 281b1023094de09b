//! Randomized checks of the transform's mathematical properties, reported in
//! the same format as the gradient suite.
//!
//! Two statements are checked both literally and in the form that is
//! actually true:
//!
//! * Limits at `s = ±50` reach `max`/`min` within 1e-6 only when neighbouring
//!   inputs are far enough apart; with a 0.1 gap near `e` the error at
//!   `s = 50` is about 1e-2. `limits.bound` checks the exact error bound.
//! * Schur convexity holds for pairs with `s ≥ 1`; pairs with `s ≤ 1` are
//!   Schur-concave (the harmonic mean of `(1, 3)` is below that of `(2, 2)`).
//!   With three or more inputs neither holds in general: evening out two
//!   small entries lowers the denominator sum and can raise `L` at large `s`.

use std::f64::consts::E;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gradcheck::{GradcheckError, GradcheckReport, KindReport};
use crate::lehmer::{
    euler_form_equivalence_check, lehmer_complex, lehmer_real, squash_to_lehmer_range,
    SuddencyComplex, RANGE_HI, RANGE_LO,
};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const TOL_IDENTITY: f64 = 1e-12;
/// Tolerance for the `s = ±50` limits.
pub const TOL_LIMIT: f64 = 1e-6;
/// Suddency used for the limit checks.
pub const LIMIT_S: f64 = 50.0;

/// Relative error `|a − b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn inputs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(1.0 / E..=E)).collect()
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.1..=10.0)).collect()
}

/// `n` values in `[e⁻¹, e]` whose sorted neighbours differ by at least `gap`.
/// Returns `None` when they do not fit.
fn separated(rng: &mut ChaCha8Rng, n: usize, gap: impl Fn(f64) -> f64) -> Option<Vec<f64>> {
    let mut x = Vec::with_capacity(n);
    let mut next = 1.0 / E;
    for _ in 0..n {
        if next > E {
            return None;
        }
        let v = rng.random_range(next..=(next + 0.2).min(E));
        x.push(v);
        next = gap(v);
    }
    x.shuffle(rng);
    Some(x)
}

fn fmt(v: &[f64]) -> String {
    format!("{v:?}")
}

fn max_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Exact bound on `max x − L(s)` for `s > 1`, from the dominant term.
fn upper_limit_bound(x: &[f64], w: &[f64], s: f64) -> f64 {
    let (m, hi) = x.iter().enumerate().fold((0, x[0]), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    x.iter()
        .zip(w)
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, (&xi, &wi))| wi / w[m] * (xi / hi).powf(s - 1.0) * (hi - xi))
        .sum()
}

/// Robin Hood transfer: moves part of the gap from a larger to a smaller
/// entry, giving a vector majorized by `x`.
fn transfer(rng: &mut ChaCha8Rng, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let i = rng.random_range(0..y.len());
    let j = rng.random_range(0..y.len());
    let (rich, poor) = if y[i] >= y[j] { (i, j) } else { (j, i) };
    let delta = rng.random_range(0.0..=0.5) * (y[rich] - y[poor]);
    y[rich] -= delta;
    y[poor] += delta;
    y
}

/// Runs every property over `cases` seeded random cases.
pub fn run_properties(seed: u64, cases: usize) -> Result<GradcheckReport, GradcheckError> {
    if cases == 0 {
        return Err(GradcheckError::NoCases);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds = Vec::new();
    let mut push = |k: KindReport| kinds.push(k);

    let means: [(&'static str, f64, fn(&[f64], &[f64]) -> f64); 3] = [
        ("mean.harmonic", 0.0, |x, w| {
            w.iter().sum::<f64>() / x.iter().zip(w).map(|(x, w)| w / x).sum::<f64>()
        }),
        ("mean.arithmetic", 1.0, |x, w| {
            x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / w.iter().sum::<f64>()
        }),
        ("mean.contraharmonic", 2.0, |x, w| {
            x.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>()
                / x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>()
        }),
    ];
    for (name, s, oracle) in means {
        let mut k = KindReport::new(name, TOL_IDENTITY);
        for _ in 0..cases {
            let n = rng.random_range(1..=8);
            let (x, w) = (inputs(&mut rng, n), weights(&mut rng, n));
            let err = relative_error(lehmer_real(&x, &w, s).expect("valid case"), oracle(&x, &w));
            k.record(err, || format!("x={} w={}", fmt(&x), fmt(&w)));
            k.cases += 1;
        }
        push(k);
    }

    let mut k = KindReport::new("bounds.monotone", TOL_IDENTITY);
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (x, w) = (inputs(&mut rng, n), weights(&mut rng, n));
        let (a, b) = (rng.random_range(-10.0..=10.0), rng.random_range(-10.0..=10.0));
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let (ls, lt) = (lehmer_real(&x, &w, s).unwrap(), lehmer_real(&x, &w, t).unwrap());
        let (lo, hi) = (min_of(&x), max_of(&x));
        let violation = [lo - ls, ls - lt, lt - hi].into_iter().fold(0.0, f64::max) / hi;
        k.record(violation, || format!("x={} w={} s={s} t={t}", fmt(&x), fmt(&w)));
        k.cases += 1;
    }
    push(k);

    // As stated: distinct inputs at least 0.1 apart.
    let mut literal = KindReport::new("limits.gap_0.1", TOL_LIMIT);
    let mut bound = KindReport::new("limits.bound", TOL_IDENTITY);
    let mut far = KindReport::new("limits.ratio_0.6", TOL_LIMIT);
    for _ in 0..cases {
        let n = rng.random_range(2..=8);
        let w = weights(&mut rng, n);
        if let Some(x) = separated(&mut rng, n, |v| v + 0.1) {
            let up = lehmer_real(&x, &w, LIMIT_S).unwrap();
            let down = lehmer_real(&x, &w, -LIMIT_S).unwrap();
            let err = (up - max_of(&x)).abs().max((down - min_of(&x)).abs());
            literal.record(err, || format!("x={} w={}", fmt(&x), fmt(&w)));
            literal.cases += 1;

            let excess = (max_of(&x) - up) - upper_limit_bound(&x, &w, LIMIT_S);
            bound.record(excess.max(0.0), || format!("x={} w={}", fmt(&x), fmt(&w)));
            bound.cases += 1;
        }
        let n = rng.random_range(2..=4);
        if let Some(x) = separated(&mut rng, n, |v| v / 0.6) {
            let w = weights(&mut rng, n);
            let up = lehmer_real(&x, &w, LIMIT_S).unwrap();
            let down = lehmer_real(&x, &w, -LIMIT_S).unwrap();
            let err = (up - max_of(&x)).abs().max((down - min_of(&x)).abs());
            far.record(err, || format!("x={} w={}", fmt(&x), fmt(&w)));
            far.cases += 1;
        }
    }
    push(literal);
    push(bound);
    push(far);

    let mut homog = KindReport::new("homogeneity", TOL_IDENTITY);
    let mut scale = KindReport::new("weight_scale", TOL_IDENTITY);
    let mut perm = KindReport::new("permutation", TOL_IDENTITY);
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (x, w) = (inputs(&mut rng, n), weights(&mut rng, n));
        let s = rng.random_range(-10.0..=10.0);
        let base = lehmer_real(&x, &w, s).unwrap();

        let lambda = rng.random_range(0.1..=10.0);
        let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let err = relative_error(lehmer_real(&scaled, &w, s).unwrap(), lambda * base);
        homog.record(err, || format!("x={} w={} s={s} lambda={lambda}", fmt(&x), fmt(&w)));
        homog.cases += 1;

        let alpha = 10f64.powf(rng.random_range(-3.0..=3.0));
        let w2: Vec<f64> = w.iter().map(|v| alpha * v).collect();
        let err = relative_error(lehmer_real(&x, &w2, s).unwrap(), base);
        scale.record(err, || format!("x={} w={} s={s} alpha={alpha}", fmt(&x), fmt(&w)));
        scale.cases += 1;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let pw: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let err = relative_error(lehmer_real(&px, &pw, s).unwrap(), base);
        perm.record(err, || format!("x={} w={} s={s} order={order:?}", fmt(&x), fmt(&w)));
        perm.cases += 1;
    }
    push(homog);
    push(scale);
    push(perm);

    // As stated: L(x) ≥ L(y) whenever x majorizes y, for every s in [−5, 5].
    let mut literal = KindReport::new("schur.any_s", TOL_IDENTITY);
    let mut convex = KindReport::new("schur.pair_convex_s_ge_1", TOL_IDENTITY);
    let mut concave = KindReport::new("schur.pair_concave_s_lt_1", TOL_IDENTITY);
    for _ in 0..cases {
        let n = rng.random_range(2..=8);
        let x = inputs(&mut rng, n);
        let y = transfer(&mut rng, &x);
        let ones = vec![1.0; n];
        let s = rng.random_range(-5.0..=5.0);
        let (lx, ly) = (lehmer_real(&x, &ones, s).unwrap(), lehmer_real(&y, &ones, s).unwrap());
        literal.record((ly - lx).max(0.0), || format!("x={} y={} s={s}", fmt(&x), fmt(&y)));
        literal.cases += 1;

        let x = inputs(&mut rng, 2);
        let y = transfer(&mut rng, &x);
        let s = rng.random_range(-5.0..=5.0);
        let (lx, ly) = (lehmer_real(&x, &[1.0; 2], s).unwrap(), lehmer_real(&y, &[1.0; 2], s).unwrap());
        let case = || format!("x={} y={} s={s}", fmt(&x), fmt(&y));
        if s >= 1.0 {
            convex.record((ly - lx).max(0.0) / lx, case);
            convex.cases += 1;
        } else {
            concave.record((lx - ly).max(0.0) / lx, case);
            concave.cases += 1;
        }
    }
    push(literal);
    push(convex);
    push(concave);

    let mut collapse = KindReport::new("complex.b0_collapse", TOL_IDENTITY);
    let mut euler = KindReport::new("complex.euler_form", TOL_IDENTITY);
    for _ in 0..cases {
        let n = rng.random_range(1..=8);
        let (x, w) = (inputs(&mut rng, n), weights(&mut rng, n));
        let (a, b) = (rng.random_range(-5.0..=5.0), rng.random_range(-5.0..=5.0));
        let z = lehmer_complex(&x, &w, SuddencyComplex::new(a, 0.0)).unwrap().value;
        let real = lehmer_real(&x, &w, a).unwrap();
        let err = relative_error(z.re, real).max(z.im.abs() / real);
        collapse.record(err, || format!("x={} w={} a={a}", fmt(&x), fmt(&w)));
        collapse.cases += 1;

        let err = euler_form_equivalence_check(&x, &w, SuddencyComplex::new(a, b)).unwrap();
        euler.record(err, || format!("x={} w={} a={a} b={b}", fmt(&x), fmt(&w)));
        euler.cases += 1;
    }
    push(collapse);
    push(euler);

    let mut squash = KindReport::new("squash.range_monotone", 0.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=cases.max(2) * 8 {
        let z = -60.0 + 120.0 * i as f64 / (cases.max(2) * 8) as f64;
        let v = squash_to_lehmer_range(z);
        let outside = if v > RANGE_LO && v < RANGE_HI { 0.0 } else { 1.0 };
        let decrease = if v >= prev { 0.0 } else { prev - v };
        squash.record(outside + decrease, || format!("z={z} value={v}"));
        squash.cases += 1;
        prev = v;
    }
    push(squash);

    Ok(GradcheckReport { kinds })
}

/// Property kinds that test a statement as literally given, where the
/// statement is false; these are expected to fail and are reported alongside
/// their corrected forms.
pub const LITERAL_KINDS: [&str; 2] = ["limits.gap_0.1", "schur.any_s"];
