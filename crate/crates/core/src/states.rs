//! Inner plane waves, outer functions, and the composed nonlinear states
//! `ψ_non = outer(φ)` together with their normalization constants.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridcore::{quadrature, ComplexField, Grid1D, PhysicalConstants};

/// Inputs with modulus below this are treated as the branch point of `φ^β`.
pub const BRANCH_POINT_GUARD: f64 = 1e-12;

/// The inner (linear) wave `φ(t,x) = amplitude·exp[i(p·x − E·t)/ħ] + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveParams {
    pub p_x: f64,
    pub energy: f64,
    pub amplitude: f64,
    pub offset: Complex64,
    pub constants: PhysicalConstants,
}

impl PlaneWaveParams {
    /// Amplitude defaults to `1/√(2πħ)` and the offset to zero.
    pub fn new(p_x: f64, energy: f64, constants: PhysicalConstants) -> Self {
        Self {
            p_x,
            energy,
            amplitude: 1.0 / (2.0 * PI * constants.hbar()).sqrt(),
            offset: Complex64::new(0.0, 0.0),
            constants,
        }
    }

    /// Free particle on the dispersion relation `E = p²/2m`.
    pub fn free(p_x: f64, constants: PhysicalConstants) -> Self {
        Self::new(p_x, p_x * p_x / (2.0 * constants.mass()), constants)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_offset(mut self, offset: Complex64) -> Self {
        self.offset = offset;
        self
    }

    pub fn omega(&self) -> f64 {
        self.energy / self.constants.hbar()
    }

    /// Reduced de Broglie wavelength `ħ/|p|`.
    pub fn lambda_bar(&self) -> Result<f64> {
        if self.p_x == 0.0 {
            return Err(Error::ZeroMomentum);
        }
        Ok(self.constants.hbar() / self.p_x.abs())
    }

    pub fn de_broglie_wavelength(&self) -> Result<f64> {
        Ok(2.0 * PI * self.lambda_bar()?)
    }

    /// `S(t,x) = p·x − E·t`.
    pub fn action(&self, t: f64, x: f64) -> f64 {
        self.p_x * x - self.energy * t
    }

    pub fn value(&self, t: f64, x: f64) -> Complex64 {
        let theta = self.action(t, x) / self.constants.hbar();
        Complex64::from_polar(self.amplitude, theta) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OuterKind {
    Exp,
    Power { beta: f64 },
}

/// `scale·exp(φ)` or `scale·φ^β` (principal branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterFunction {
    pub kind: OuterKind,
    pub scale: Complex64,
}

impl OuterFunction {
    pub fn exp(scale: Complex64) -> Self {
        Self {
            kind: OuterKind::Exp,
            scale,
        }
    }

    pub fn power(beta: f64, scale: Complex64) -> Self {
        Self {
            kind: OuterKind::Power { beta },
            scale,
        }
    }

    /// `φ ↦ φ`, i.e. `Power(1)` with unit scale.
    pub fn identity() -> Self {
        Self::power(1.0, Complex64::new(1.0, 0.0))
    }

    /// `φ^e`: exact repeated multiplication when the
    /// exponent is a non-negative integer (no branch point), principal branch
    /// otherwise.
    fn pow(phi: Complex64, exponent: f64) -> Result<Complex64> {
        if exponent >= 0.0 && exponent.fract() == 0.0 && exponent <= f64::from(u32::MAX) {
            return Ok(phi.powu(exponent as u32));
        }
        let modulus = phi.norm();
        if modulus < BRANCH_POINT_GUARD {
            return Err(Error::BranchPoint(modulus));
        }
        Ok((phi.ln() * exponent).exp())
    }

    fn check_branch(&self, phi: Complex64) -> Result<()> {
        if let OuterKind::Power { beta } = self.kind {
            let integral = beta >= 0.0 && beta.fract() == 0.0;
            if !integral && phi.norm() < BRANCH_POINT_GUARD {
                return Err(Error::BranchPoint(phi.norm()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, phi: Complex64) -> Result<Complex64> {
        self.check_branch(phi)?;
        match self.kind {
            OuterKind::Exp => Ok(self.scale * phi.exp()),
            OuterKind::Power { beta } => Ok(self.scale * Self::pow(phi, beta)?),
        }
    }

    /// The unique operator `∂/∂φ` applied to the outer function.
    pub fn derivative(&self, phi: Complex64) -> Result<Complex64> {
        self.check_branch(phi)?;
        match self.kind {
            OuterKind::Exp => Ok(self.scale * phi.exp()),
            OuterKind::Power { beta: 0.0 } => Ok(Complex64::new(0.0, 0.0)),
            OuterKind::Power { beta } => Ok(self.scale * beta * Self::pow(phi, beta - 1.0)?),
        }
    }

    pub fn second_derivative(&self, phi: Complex64) -> Result<Complex64> {
        self.check_branch(phi)?;
        match self.kind {
            OuterKind::Exp => Ok(self.scale * phi.exp()),
            OuterKind::Power { beta } if beta == 0.0 || beta == 1.0 => Ok(Complex64::new(0.0, 0.0)),
            OuterKind::Power { beta } => {
                Ok(self.scale * beta * (beta - 1.0) * Self::pow(phi, beta - 2.0)?)
            }
        }
    }

    pub fn apply(&self, inner: &ComplexField) -> Result<ComplexField> {
        let values = inner
            .values()
            .iter()
            .map(|&phi| self.eval(phi))
            .collect::<Result<Vec<_>>>()?;
        ComplexField::new(*inner.grid(), values)
    }

    pub fn derivative_field(&self, inner: &ComplexField) -> Result<ComplexField> {
        let values = inner
            .values()
            .iter()
            .map(|&phi| self.derivative(phi))
            .collect::<Result<Vec<_>>>()?;
        ComplexField::new(*inner.grid(), values)
    }

    pub fn second_derivative_field(&self, inner: &ComplexField) -> Result<ComplexField> {
        let values = inner
            .values()
            .iter()
            .map(|&phi| self.second_derivative(phi))
            .collect::<Result<Vec<_>>>()?;
        ComplexField::new(*inner.grid(), values)
    }
}

/// `ψ_non = outer(φ)` sampled on a grid, with the inner field kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearState {
    outer: OuterFunction,
    inner: ComplexField,
    composed: ComplexField,
}

impl NonlinearState {
    pub fn new(outer: OuterFunction, inner: ComplexField) -> Result<Self> {
        let composed = outer.apply(&inner)?;
        Ok(Self {
            outer,
            inner,
            composed,
        })
    }

    /// Assembles a state from externally computed samples, checking that the
    /// composed values equal `outer(inner)` to 1e-14 relative.
    pub fn from_parts(
        outer: OuterFunction,
        inner: ComplexField,
        composed: ComplexField,
    ) -> Result<Self> {
        inner.ensure_same_grid(&composed)?;
        let expected = outer.apply(&inner)?;
        let scale = expected.norm_linf().max(f64::MIN_POSITIVE);
        let defect = expected.sub(&composed)?.norm_linf() / scale;
        if defect > 1e-14 {
            return Err(Error::InvalidConfig(
                "composed samples do not equal outer(inner)",
            ));
        }
        Ok(Self {
            outer,
            inner,
            composed,
        })
    }

    pub fn outer(&self) -> &OuterFunction {
        &self.outer
    }

    pub fn inner(&self) -> &ComplexField {
        &self.inner
    }

    pub fn composed(&self) -> &ComplexField {
        &self.composed
    }

    pub fn grid(&self) -> &Grid1D {
        self.inner.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMethod {
    DeltaApproximation,
    MomentumDelta,
    NumericQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResult {
    pub constant: f64,
    pub method: NormalizationMethod,
    /// Integration window `(x_min, x_max)`; `None` for the analytic constants.
    pub window: Option<(f64, f64)>,
}

pub fn plane_wave(params: &PlaneWaveParams, grid: Grid1D, t: f64) -> Result<ComplexField> {
    ComplexField::from_fn(grid, |x| params.value(t, x))
}

/// `ψ_non(x) = √(ħ/|p|)·exp(exp(i·p·x/ħ))`.
///
/// For negative momenta the constant uses `|p|` so it stays real and positive.
pub fn nonlinear_eigenstate(
    p_x: f64,
    grid: Grid1D,
    constants: PhysicalConstants,
) -> Result<NonlinearState> {
    if p_x == 0.0 || !p_x.is_finite() {
        return Err(Error::ZeroMomentum);
    }
    let params = PlaneWaveParams::new(p_x, 0.0, constants).with_amplitude(1.0);
    let inner = plane_wave(&params, grid, 0.0)?;
    let scale = (constants.hbar() / p_x.abs()).sqrt();
    NonlinearState::new(OuterFunction::exp(Complex64::new(scale, 0.0)), inner)
}

/// `scale·exp(−i·β·ω·t)`.
pub fn time_factor(beta_non: f64, omega: f64, t: f64, scale: Complex64) -> Complex64 {
    scale * Complex64::from_polar(1.0, -beta_non * omega * t)
}

/// `ψ_non = const_scale·exp(φ(t,x))` with `φ` the zero-offset plane wave.
pub fn free_particle_nonlinear(
    params: &PlaneWaveParams,
    grid: Grid1D,
    t: f64,
    const_scale: Complex64,
) -> Result<NonlinearState> {
    if const_scale.norm() == 0.0 {
        return Err(Error::ZeroScale);
    }
    let inner = plane_wave(&params.with_offset(Complex64::new(0.0, 0.0)), grid, t)?;
    NonlinearState::new(OuterFunction::exp(const_scale), inner)
}

/// `C = √(2ƛ)`, the closed-form result of the truncated delta-composition
/// argument.
pub fn normalization_constant_delta(lambda_bar: f64) -> Result<NormalizationResult> {
    if !(lambda_bar.is_finite() && lambda_bar > 0.0) {
        return Err(Error::NonPositive {
            name: "lambda_bar",
            value: lambda_bar,
        });
    }
    Ok(NormalizationResult {
        constant: (2.0 * lambda_bar).sqrt(),
        method: NormalizationMethod::DeltaApproximation,
        window: None,
    })
}

/// `C = √(ħ/p)`.
pub fn normalization_constant_momentum(
    p_x: f64,
    constants: PhysicalConstants,
) -> Result<NormalizationResult> {
    if !(p_x.is_finite() && p_x > 0.0) {
        return Err(Error::NonPositive {
            name: "p_x",
            value: p_x,
        });
    }
    Ok(NormalizationResult {
        constant: (constants.hbar() / p_x).sqrt(),
        method: NormalizationMethod::MomentumDelta,
        window: None,
    })
}

/// Scales `f` by a positive real constant so that `∫|f|² dx = 1` over the
/// grid window.
pub fn normalize_numeric(f: &ComplexField) -> Result<(ComplexField, NormalizationResult)> {
    let density = f.map(|_, v| Complex64::new(v.norm_sqr(), 0.0))?;
    let norm = quadrature(&density).re;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ZeroNorm);
    }
    let constant = 1.0 / norm.sqrt();
    let scaled = f.scale(Complex64::new(constant, 0.0))?;
    let grid = f.grid();
    Ok((
        scaled,
        NormalizationResult {
            constant,
            method: NormalizationMethod::NumericQuadrature,
            window: Some((grid.x_min(), grid.x_max())),
        },
    ))
}
