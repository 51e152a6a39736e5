//! One-dimensional sampling grids, complex fields on them, and the numerical
//! calculus (differentiation, quadrature, inner products, distances) that every
//! other module builds on.

mod diff;
mod field;
mod integrate;

pub use diff::{
    derivative, derivative_open, differentiate_samples, fd_weights, observed_order, DiffScheme,
    SpectralDiff, StencilOrder,
};
pub use field::{residual_norms, ComplexField};
pub use integrate::{inner_product, metric_distance, quadrature};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform 1D grid. Periodic grids exclude `x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    periodic: bool,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidExtent { x_min, x_max });
        }
        if n < 8 {
            return Err(Error::InvalidCount(n));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            periodic,
        })
    }

    /// Periodic window `[0, periods · 2πħ/|p|)`, i.e. an integer number of
    /// de Broglie wavelengths.
    pub fn de_broglie_window(p_x: f64, hbar: f64, n: usize, periods: u32) -> Result<Self> {
        if p_x == 0.0 || !p_x.is_finite() {
            return Err(Error::ZeroMomentum);
        }
        let wavelength = 2.0 * PI * hbar / p_x.abs();
        Self::new(0.0, f64::from(periods.max(1)) * wavelength, n, true)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            self.length() / self.n as f64
        } else {
            self.length() / (self.n - 1) as f64
        }
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    /// Angular wavenumbers in FFT order: `0, 1, …, n/2-1, -n/2, …, -1` times `2π/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = 2.0 * PI / self.length();
        (0..self.n)
            .map(|j| {
                let signed = if j < self.n.div_ceil(2) {
                    j as f64
                } else {
                    j as f64 - self.n as f64
                };
                signed * base
            })
            .collect()
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            n: self.n,
            x_min: self.x_min,
            x_max: self.x_max,
            periodic: self.periodic,
        }
    }
}

/// Serializable grid description carried by reports. Also used for time
/// axes, where `n` is the number of time samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub periodic: bool,
}

impl GridMeta {
    pub fn time_axis(times: &[f64]) -> Self {
        Self {
            n: times.len(),
            x_min: times.first().copied().unwrap_or(0.0),
            x_max: times.last().copied().unwrap_or(0.0),
            periodic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::NonPositive {
                name: "hbar",
                value: hbar,
            });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NonPositive {
                name: "mass",
                value: mass,
            });
        }
        Ok(Self { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}
