//! Time evolution under the Schrödinger-type NPDE, the complex quantum
//! potential, separation of variables, the β ODE, and the unitary phase
//! propagator.
//!
//! Two evolution semantics are provided. [`evolve_direct`] integrates
//! `iħ∂ψ/∂t = −(ħ²/2m)∂²ψ/∂x² + Vψ` for the sampled composed field itself.
//! [`evolve_induced`] evolves the inner wave under the same linear equation
//! and recomposes `outer(φ(t))` at each recorded step. For a linear outer the
//! two coincide; for the exponential outer they drift apart at a rate given by
//! [`plane_wave_defect`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridcore::{
    differentiate_samples, quadrature, residual_norms, ComplexField, Grid1D, GridMeta,
    PhysicalConstants, SpectralDiff, StencilOrder,
};
use crate::phase::unwrapped_arg;
use crate::report::ResidualReport;
use crate::states::{NonlinearState, OuterFunction, PlaneWaveParams};

/// `dt ≤ STABILITY_FACTOR·m·dx²/ħ` for the RK4 pseudo-spectral integrator.
pub const STABILITY_FACTOR: f64 = 0.2;

/// Values with modulus below this count as zero crossings in log-derivative
/// checks.
pub const ZERO_GUARD: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Potential {
    Zero,
    Tabulated(Vec<f64>),
}

impl Potential {
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self::Tabulated(values))
    }

    /// Potential samples on `grid`, checking the length.
    pub fn sampled(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        match self {
            Self::Zero => Ok(vec![0.0; grid.n()]),
            Self::Tabulated(v) if v.len() == grid.n() => Ok(v.clone()),
            Self::Tabulated(v) => Err(Error::PotentialLength {
                expected: grid.n(),
                got: v.len(),
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionScheme {
    SplitStep,
    Rk4Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: EvolutionScheme,
    pub record_every: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be positive"));
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// Largest RK4 step accepted on `grid`.
    pub fn stability_bound(grid: &Grid1D, constants: PhysicalConstants) -> f64 {
        STABILITY_FACTOR * constants.mass() * grid.spacing().powi(2) / constants.hbar()
    }
}

/// Recorded snapshots of an evolution; `times[k]` belongs to `snapshots[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedEvolution {
    pub times: Vec<f64>,
    pub states: Vec<NonlinearState>,
}

impl InducedEvolution {
    pub fn composed(&self) -> Vec<ComplexField> {
        self.states.iter().map(|s| s.composed().clone()).collect()
    }
}

struct Stepper {
    spectral: SpectralDiff,
    potential: Vec<f64>,
    constants: PhysicalConstants,
    dt: f64,
    kinetic_phase: Vec<Complex64>,
    potential_half_phase: Vec<Complex64>,
}

impl Stepper {
    fn new(
        grid: &Grid1D,
        potential: &Potential,
        dt: f64,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let spectral = SpectralDiff::new(grid)?;
        let potential = potential.sampled(grid)?;
        let (hbar, mass) = (constants.hbar(), constants.mass());
        let kinetic_phase = spectral
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * mass)))
            .collect();
        let potential_half_phase = potential
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar)))
            .collect();
        Ok(Self {
            spectral,
            potential,
            constants,
            dt,
            kinetic_phase,
            potential_half_phase,
        })
    }

    /// Strang splitting: half potential, full kinetic, half potential.
    fn split_step(&self, psi: &mut [Complex64]) {
        let has_potential = self.potential.iter().any(|&v| v != 0.0);
        if has_potential {
            psi.iter_mut()
                .zip(&self.potential_half_phase)
                .for_each(|(v, p)| *v *= p);
        }
        self.spectral.forward(psi);
        psi.iter_mut()
            .zip(&self.kinetic_phase)
            .for_each(|(v, p)| *v *= p);
        self.spectral.inverse(psi);
        if has_potential {
            psi.iter_mut()
                .zip(&self.potential_half_phase)
                .for_each(|(v, p)| *v *= p);
        }
    }

    /// `−(i/ħ)Hψ` with a spectral Laplacian.
    fn rhs(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let (hbar, mass) = (self.constants.hbar(), self.constants.mass());
        let mut buf = psi.to_vec();
        self.spectral.forward(&mut buf);
        buf.iter_mut()
            .zip(self.spectral.wavenumbers())
            .for_each(|(v, k)| *v *= hbar * hbar * k * k / (2.0 * mass));
        self.spectral.inverse(&mut buf);
        buf.iter()
            .zip(psi)
            .zip(&self.potential)
            .map(|((kin, p), v)| -I / hbar * (kin + p * v))
            .collect()
    }

    fn rk4_step(&self, psi: &mut [Complex64]) {
        let dt = self.dt;
        let axpy = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rhs(psi);
        let k2 = self.rhs(&axpy(psi, &k1, 0.5 * dt));
        let k3 = self.rhs(&axpy(psi, &k2, 0.5 * dt));
        let k4 = self.rhs(&axpy(psi, &k3, dt));
        for (i, v) in psi.iter_mut().enumerate() {
            *v += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
    }
}

/// Integrates the linear Schrödinger-form equation for the sampled field.
///
/// Snapshots are recorded at step 0, every `record_every` steps, and at the
/// final step.
pub fn evolve_direct(
    initial: &ComplexField,
    potential: &Potential,
    config: &EvolutionConfig,
    constants: PhysicalConstants,
) -> Result<Evolution> {
    config.validate()?;
    let grid = *initial.grid();
    if !grid.is_periodic() {
        return Err(Error::NonPeriodicGrid("evolution"));
    }
    if config.scheme == EvolutionScheme::Rk4Spectral {
        let bound = EvolutionConfig::stability_bound(&grid, constants);
        if config.dt > bound {
            return Err(Error::StabilityViolation {
                dt: config.dt,
                bound,
            });
        }
    }
    let stepper = Stepper::new(&grid, potential, config.dt, constants)?;
    let mut psi = initial.values().to_vec();
    let mut times = vec![0.0];
    let mut snapshots = vec![initial.clone()];
    for step in 1..=config.steps {
        match config.scheme {
            EvolutionScheme::SplitStep => stepper.split_step(&mut psi),
            EvolutionScheme::Rk4Spectral => stepper.rk4_step(&mut psi),
        }
        if step % config.record_every == 0 || step == config.steps {
            times.push(step as f64 * config.dt);
            snapshots.push(ComplexField::new(grid, psi.clone())?);
        }
    }
    Ok(Evolution { times, snapshots })
}

/// Evolves the inner wave linearly and recomposes the outer function at every
/// recorded time.
pub fn evolve_induced(
    initial: &NonlinearState,
    potential: &Potential,
    config: &EvolutionConfig,
    constants: PhysicalConstants,
) -> Result<InducedEvolution> {
    let inner = evolve_direct(initial.inner(), potential, config, constants)?;
    let states = inner
        .snapshots
        .into_iter()
        .map(|phi| NonlinearState::new(*initial.outer(), phi))
        .collect::<Result<Vec<_>>>()?;
    Ok(InducedEvolution {
        times: inner.times,
        states,
    })
}

/// `(t, ‖a(t) − b(t)‖∞)` for two series recorded at the same times.
pub fn divergence(
    times: &[f64],
    a: &[ComplexField],
    b: &[ComplexField],
) -> Result<Vec<(f64, f64)>> {
    if a.len() != b.len() || a.len() != times.len() {
        return Err(Error::SeriesLengthMismatch(a.len(), b.len()));
    }
    times
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&t, (x, y))| Ok((t, x.sub(y)?.norm_linf())))
        .collect()
}

/// `iħ∂ψ/∂t − Hψ` for an analytically known candidate `ψ(t)`.
///
/// The time derivative uses the 5-point central stencil with step `dt`
/// around `t`; `H` uses a spectral Laplacian.
pub fn candidate_residual(
    candidate: impl Fn(f64) -> Result<ComplexField>,
    t: f64,
    dt: f64,
    potential: &Potential,
    constants: PhysicalConstants,
) -> Result<ComplexField> {
    let at = |s: f64| candidate(t + s * dt);
    let (m2, m1, c0, p1, p2) = (at(-2.0)?, at(-1.0)?, at(0.0)?, at(1.0)?, at(2.0)?);
    let grid = *c0.grid();
    let spectral = SpectralDiff::new(&grid)?;
    let v = potential.sampled(&grid)?;
    let d2 = spectral.apply(c0.values(), 2)?;
    let kinetic = -constants.hbar().powi(2) / (2.0 * constants.mass());
    let values = (0..grid.n())
        .map(|k| {
            let dpsi = (m2.values()[k] - p2.values()[k] + 8.0 * (p1.values()[k] - m1.values()[k]))
                / (12.0 * dt);
            let lhs = I * constants.hbar() * dpsi;
            let rhs = kinetic * d2[k] + v[k] * c0.values()[k];
            lhs - rhs
        })
        .collect();
    ComplexField::new(grid, values)
}

/// Closed-form residual `iħ∂ψ/∂t + (ħ²/2m)∂²ψ/∂x²` of `ψ = outer(φ)` for a
/// zero-offset plane-wave inner `φ` with `V = 0`:
/// `E·f′(φ)·φ − (p²/2m)·(f″(φ)·φ² + f′(φ)·φ)`.
///
/// On the dispersion relation this reduces to `−(p²/2m)·f″(φ)·φ²`.
pub fn plane_wave_defect(
    outer: &OuterFunction,
    params: &PlaneWaveParams,
    grid: Grid1D,
    t: f64,
) -> Result<ComplexField> {
    let kinetic = params.p_x * params.p_x / (2.0 * params.constants.mass());
    let values = (0..grid.n())
        .map(|k| {
            let phi = params.value(t, grid.point(k)) - params.offset;
            let d1 = outer.derivative(phi)?;
            let d2 = outer.second_derivative(phi)?;
            Ok(params.energy * d1 * phi - kinetic * (d2 * phi * phi + d1 * phi))
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexField::new(grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionSource {
    /// `S = p·x − E·t`, known exactly (second derivative identically zero).
    AnalyticPlaneWave { p_x: f64, energy: f64, t: f64 },
    /// `S = ħ·arg φ`, unwrapped along the grid.
    UnwrappedPhase,
    /// Arbitrary caller-supplied samples.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionField {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub source: ActionSource,
}

impl ActionField {
    pub fn plane_wave(params: &PlaneWaveParams, grid: Grid1D, t: f64) -> Self {
        Self {
            grid,
            values: grid.points().iter().map(|&x| params.action(t, x)).collect(),
            source: ActionSource::AnalyticPlaneWave {
                p_x: params.p_x,
                energy: params.energy,
                t,
            },
        }
    }

    pub fn from_phase(phi: &ComplexField, constants: PhysicalConstants) -> Self {
        let phase = unwrapped_arg(phi.values(), None);
        Self {
            grid: *phi.grid(),
            values: phase.phase.iter().map(|p| constants.hbar() * p).collect(),
            source: ActionSource::UnwrappedPhase,
        }
    }

    pub fn tabulated(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid,
            values,
            source: ActionSource::Tabulated,
        })
    }

    /// `∂²S/∂x²`; exactly zero for the analytic plane-wave action, open
    /// finite differences otherwise (actions are generally not periodic).
    pub fn second_derivative(&self, stencil: StencilOrder) -> Result<Vec<f64>> {
        if let ActionSource::AnalyticPlaneWave { .. } = self.source {
            return Ok(vec![0.0; self.grid.n()]);
        }
        let samples: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        Ok(
            differentiate_samples(&samples, self.grid.spacing(), 2, stencil, false)?
                .into_iter()
                .map(|v| v.re)
                .collect(),
        )
    }
}

/// Complex quantum potential `Q₁ = (iħ/2m)·outer′(φ)·(∂²S/∂x²)·φ`.
pub fn q1_potential(
    state: &NonlinearState,
    action: &ActionField,
    constants: PhysicalConstants,
    stencil: StencilOrder,
) -> Result<ComplexField> {
    if action.grid != *state.grid() {
        return Err(Error::GridMismatch);
    }
    let s_xx = action.second_derivative(stencil)?;
    let prefactor = I * constants.hbar() / (2.0 * constants.mass());
    let outer_prime = state.outer().derivative_field(state.inner())?;
    let values = outer_prime
        .values()
        .iter()
        .zip(state.inner().values())
        .zip(&s_xx)
        .map(|((d, phi), s)| prefactor * d * s * phi)
        .collect();
    ComplexField::new(*state.grid(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    /// Mean of the separated time equation's left side over interior times.
    pub e_non: Complex64,
    /// `Re(E_non)/E`; `None` when `E = 0`.
    pub beta_non: Option<f64>,
    /// `|lhs(t) − E_non|` at each interior time.
    pub residual_profile: Vec<f64>,
    pub times: Vec<f64>,
    pub lhs: Vec<Complex64>,
}

fn ensure_times<T>(times: &[T]) -> Result<()> {
    if times.len() < 5 {
        return Err(Error::SeriesTooShort {
            got: times.len(),
            min: 5,
        });
    }
    Ok(())
}

/// Evaluates `iħ·(1/ψ_t)·(∂ψ_t/∂φ_t)·(∂φ_t/∂t)` with `φ_t = exp(−iωt)` and
/// `ψ_t = outer_t(φ_t)`, the φ time derivative by central differences.
pub fn separation_check(
    outer_t: &OuterFunction,
    omega: f64,
    energy: f64,
    times: &[f64],
    constants: PhysicalConstants,
) -> Result<SeparationResult> {
    ensure_times(times)?;
    let phi: Vec<Complex64> = times
        .iter()
        .map(|&t| Complex64::from_polar(1.0, -omega * t))
        .collect();
    let mut lhs = Vec::with_capacity(times.len() - 2);
    for i in 1..times.len() - 1 {
        let dphi = (phi[i + 1] - phi[i - 1]) / (times[i + 1] - times[i - 1]);
        let psi = outer_t.eval(phi[i])?;
        let dpsi_dphi = outer_t.derivative(phi[i])?;
        lhs.push(I * constants.hbar() * dpsi_dphi * dphi / psi);
    }
    let e_non = lhs.iter().sum::<Complex64>() / lhs.len() as f64;
    let residual_profile = lhs.iter().map(|v| (v - e_non).norm()).collect();
    Ok(SeparationResult {
        e_non,
        beta_non: (energy != 0.0).then(|| e_non.re / energy),
        residual_profile,
        times: times[1..times.len() - 1].to_vec(),
        lhs,
    })
}

/// Continuous complex logarithm of a series, branch tracked along the series.
fn continuous_log(series: &[Complex64]) -> Result<Vec<Complex64>> {
    if let Some((index, v)) = series
        .iter()
        .enumerate()
        .find(|(_, v)| v.norm() < ZERO_GUARD)
    {
        return Err(Error::ZeroCrossing {
            index,
            modulus: v.norm(),
        });
    }
    let phase = unwrapped_arg(series, None);
    Ok(series
        .iter()
        .zip(phase.phase)
        .map(|(v, arg)| Complex64::new(v.norm().ln(), arg))
        .collect())
}

/// Residual of `dψ/ψ = β·dφ/φ` at interior samples.
///
/// Both logarithmic derivatives are taken as central differences of the
/// branch-tracked `ln ψ` and `ln φ`, which is exact for `ψ ∝ φ^β`.
pub fn beta_ode_residual(
    psi_series: &[Complex64],
    phi_series: &[Complex64],
    beta: f64,
    dt: f64,
    tolerance: f64,
) -> Result<ResidualReport> {
    if psi_series.len() != phi_series.len() {
        return Err(Error::SeriesLengthMismatch(
            psi_series.len(),
            phi_series.len(),
        ));
    }
    ensure_times(psi_series)?;
    let ln_psi = continuous_log(psi_series)?;
    let ln_phi = continuous_log(phi_series)?;
    let residual: Vec<Complex64> = (1..psi_series.len() - 1)
        .map(|i| {
            let dpsi = (ln_psi[i + 1] - ln_psi[i - 1]) / (2.0 * dt);
            let dphi = (ln_phi[i + 1] - ln_phi[i - 1]) / (2.0 * dt);
            dpsi - beta * dphi
        })
        .collect();
    let (linf, l2) = residual_norms(&residual, dt);
    let times: Vec<f64> = (0..psi_series.len()).map(|k| k as f64 * dt).collect();
    Ok(
        ResidualReport::new("beta-ode", GridMeta::time_axis(&times), linf, l2, tolerance)
            .with_param("beta", beta)
            .with_param("dt", dt),
    )
}

/// `ψ(t) = exp(−i·E_non·t/ħ)·ψ(0)`.
pub fn propagator_apply(
    initial: &ComplexField,
    e_non: f64,
    t: f64,
    constants: PhysicalConstants,
) -> Result<ComplexField> {
    initial.scale(Complex64::from_polar(1.0, -e_non * t / constants.hbar()))
}

pub fn propagator_series(
    initial: &ComplexField,
    e_non: f64,
    times: &[f64],
    constants: PhysicalConstants,
) -> Result<Vec<ComplexField>> {
    times
        .iter()
        .map(|&t| propagator_apply(initial, e_non, t, constants))
        .collect()
}

/// Checks `iħ∂ψ/∂t = E_non·ψ` for the propagated series at `t_k = k·dt`,
/// using central differences at the interior times.
pub fn propagator_generator_residual(
    initial: &ComplexField,
    e_non: f64,
    dt: f64,
    samples: usize,
    constants: PhysicalConstants,
    tolerance: f64,
) -> Result<ResidualReport> {
    if samples < 5 {
        return Err(Error::SeriesTooShort {
            got: samples,
            min: 5,
        });
    }
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
    let series = propagator_series(initial, e_non, &times, constants)?;
    let mut residual = Vec::new();
    for k in 1..samples - 1 {
        for j in 0..initial.len() {
            let d = (series[k + 1].values()[j] - series[k - 1].values()[j]) / (2.0 * dt);
            residual.push(I * constants.hbar() * d - e_non * series[k].values()[j]);
        }
    }
    let (linf, l2) = residual_norms(&residual, initial.grid().spacing());
    Ok(
        ResidualReport::new("propagator", initial.grid().meta(), linf, l2, tolerance)
            .with_param("e_non", e_non)
            .with_param("dt", dt)
            .with_param("samples", samples as u64)
            .with_param("norm_drift", norm_drift(&series)?),
    )
}

/// `max_t |∫|ψ(t)|² − ∫|ψ(0)|²| / ∫|ψ(0)|²`.
pub fn norm_drift(series: &[ComplexField]) -> Result<f64> {
    let first = series.first().ok_or(Error::EmptySeries)?;
    let norm = |f: &ComplexField| -> Result<f64> {
        Ok(quadrature(&f.map(|_, v| Complex64::new(v.norm_sqr(), 0.0))?).re)
    };
    let n0 = norm(first)?;
    if n0 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut drift = 0.0f64;
    for f in series {
        first.ensure_same_grid(f)?;
        drift = drift.max((norm(f)? - n0).abs() / n0);
    }
    Ok(drift)
}
