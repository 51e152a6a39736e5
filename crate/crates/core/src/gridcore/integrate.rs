use num_complex::Complex64;

use super::{ComplexField, Grid1D};
use crate::error::Result;

/// Rectangle rule on periodic grids, trapezoid rule otherwise.
pub(crate) fn integrate_samples(grid: &Grid1D, values: &[Complex64]) -> Complex64 {
    let h = grid.spacing();
    let sum: Complex64 = values.iter().sum();
    if grid.is_periodic() {
        sum * h
    } else {
        let ends = (values[0] + values[values.len() - 1]) * 0.5;
        (sum - ends) * h
    }
}

/// `∫ f dx` over the grid extent.
pub fn quadrature(f: &ComplexField) -> Complex64 {
    integrate_samples(f.grid(), f.values())
}

/// `⟨f, g⟩ = ∫ f* g dx`, conjugate-linear in `f`.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.ensure_same_grid(g)?;
    let prod: Vec<Complex64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a.conj() * b)
        .collect();
    Ok(integrate_samples(f.grid(), &prod))
}

/// `D(f, g) = ∫ sqrt(|f|² + |g|² − 2·Re(f* g)) dx`.
///
/// The cross term uses the real part, so the radicand equals `|f − g|²`.
/// Negative radicands from rounding are clamped to zero.
pub fn metric_distance(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let integrand: Vec<Complex64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| {
            let radicand = a.norm_sqr() + b.norm_sqr() - 2.0 * (a.conj() * b).re;
            Complex64::new(radicand.max(0.0).sqrt(), 0.0)
        })
        .collect();
    Ok(integrate_samples(f.grid(), &integrand).re)
}
