use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ComplexField, Grid1D};
use crate::error::{Error, Result};

/// Accuracy order of a central finite-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilOrder {
    Second,
    Fourth,
    Eighth,
}

impl StencilOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            8 => Ok(Self::Eighth),
            other => Err(Error::InvalidStencil(other)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
            Self::Eighth => 8,
        }
    }

    /// Half-width of the central stencil.
    pub fn radius(self) -> usize {
        self.order() / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    Spectral,
    FiniteDifference(StencilOrder),
}

/// Fornberg's recursion for finite-difference weights.
///
/// Returns `w[k][j]`, the weight of node `nodes[j]` in the approximation of
/// the `k`-th derivative at `z`, for `k = 0..=max_deriv`.
pub fn fd_weights(z: f64, nodes: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn stencil(offsets: &[i64], deriv: usize, h: f64) -> Vec<f64> {
    let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let scale = h.powi(deriv as i32);
    fd_weights(0.0, &nodes, deriv)[deriv]
        .iter()
        .map(|w| w / scale)
        .collect()
}

/// Finite-difference derivative of uniformly spaced samples.
///
/// Central stencils of the given accuracy in the interior. Periodic data wrap
/// around; otherwise the points within one stencil radius of either end use
/// one-sided stencils of `accuracy + deriv` nodes.
pub fn differentiate_samples(
    values: &[Complex64],
    h: f64,
    deriv: usize,
    accuracy: StencilOrder,
    periodic: bool,
) -> Result<Vec<Complex64>> {
    if deriv == 0 || deriv > 2 {
        return Err(Error::InvalidDerivativeOrder(deriv));
    }
    let n = values.len();
    let r = accuracy.radius();
    let one_sided = accuracy.order() + deriv;
    let min_len = if periodic {
        2 * r + 1
    } else {
        one_sided.max(2 * r + 1)
    };
    if n < min_len {
        return Err(Error::SeriesTooShort {
            got: n,
            min: min_len,
        });
    }
    let central_offsets: Vec<i64> = (-(r as i64)..=r as i64).collect();
    let central = stencil(&central_offsets, deriv, h);
    let apply = |i: usize, offsets: &[i64], weights: &[f64]| -> Complex64 {
        offsets
            .iter()
            .zip(weights)
            .map(|(&o, &w)| {
                let j = (i as i64 + o).rem_euclid(n as i64) as usize;
                values[j] * w
            })
            .sum()
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if periodic || (i >= r && i + r < n) {
            out.push(apply(i, &central_offsets, &central));
        } else {
            let start = if i < r { 0 } else { n - one_sided };
            let offsets: Vec<i64> = (start..start + one_sided)
                .map(|j| j as i64 - i as i64)
                .collect();
            let w = stencil(&offsets, deriv, h);
            out.push(apply(i, &offsets, &w));
        }
    }
    Ok(out)
}

/// FFT-backed differentiation on a periodic grid.
#[derive(Clone)]
pub struct SpectralDiff {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for SpectralDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDiff")
            .field("n", &self.wavenumbers.len())
            .finish()
    }
}

impl SpectralDiff {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::SchemeMismatch(
                "spectral differentiation needs a periodic grid",
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
            wavenumbers: grid.wavenumbers(),
        })
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let inv_n = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= inv_n);
    }

    pub fn apply(&self, values: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
        if order == 0 || order > 2 {
            return Err(Error::InvalidDerivativeOrder(order));
        }
        let n = values.len();
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (j, (v, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            // The unpaired Nyquist mode has no odd derivative.
            if order == 1 && n.is_multiple_of(2) && j == n / 2 {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            *v *= Complex64::new(0.0, k).powu(order as u32);
        }
        self.inverse(&mut buf);
        Ok(buf)
    }
}

/// `∂^order f / ∂x^order` on the field's own grid.
pub fn derivative(f: &ComplexField, order: usize, scheme: DiffScheme) -> Result<ComplexField> {
    let grid = *f.grid();
    let values = match scheme {
        DiffScheme::Spectral => SpectralDiff::new(&grid)?.apply(f.values(), order)?,
        DiffScheme::FiniteDifference(stencil) => differentiate_samples(
            f.values(),
            grid.spacing(),
            order,
            stencil,
            grid.is_periodic(),
        )?,
    };
    ComplexField::new(grid, values)
}

/// Finite-difference derivative that never wraps around, even on a periodic
/// grid. Used where the differentiated quantity (e.g. `xⁿ·ψ`) is not periodic.
pub fn derivative_open(
    f: &ComplexField,
    order: usize,
    stencil: StencilOrder,
) -> Result<ComplexField> {
    let grid = *f.grid();
    let values = differentiate_samples(f.values(), grid.spacing(), order, stencil, false)?;
    ComplexField::new(grid, values)
}

/// Least-squares slope of `ln(error)` against `ln(step)`.
///
/// `None` when fewer than two usable points exist (zero or non-finite errors
/// are skipped).
pub fn observed_order(steps: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
