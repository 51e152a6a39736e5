//! Independent reference values computed without the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + refine(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    refine(f, a, fa, b, fb, m, fm, whole, tol, 24)
}

/// `Iₙ(x) = (1/π)∫₀^π e^{x cos θ} cos(nθ) dθ`.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    let f = move |th: f64| (x * th.cos()).exp() * (f64::from(n) * th).cos();
    adaptive_simpson(&f, 0.0, PI, 1e-13) / PI
}

/// `∫₀^L |ψ|² dx` for `ψ = sqrt(ħ/p)·exp(exp(i p x/ħ))` over one period.
pub fn eigenstate_norm_sq(p: f64, hbar: f64) -> f64 {
    let period = 2.0 * PI * hbar / p;
    let f = move |x: f64| hbar / p * (2.0 * (p * x / hbar).cos()).exp();
    adaptive_simpson(&f, 0.0, period, 1e-13)
}

/// `⟨P⟩` of the same eigenstate after unit normalization over one period.
pub fn eigenstate_momentum_expectation(p: f64, hbar: f64) -> f64 {
    let period = 2.0 * PI * hbar / p;
    let weight = move |x: f64| (2.0 * (p * x / hbar).cos()).exp();
    let num = adaptive_simpson(&|x| weight(x) * (p * x / hbar).cos(), 0.0, period, 1e-13);
    let den = adaptive_simpson(&weight, 0.0, period, 1e-13);
    p * num / den
}

#[cfg(test)]
mod self_check {
    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = super::adaptive_simpson(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
    }
}
