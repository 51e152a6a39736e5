//! Recovery of the inner linear wave function from composed states, the
//! implicit-derivative identity, dispersion fitting and β estimation.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridcore::{
    observed_order, residual_norms, ComplexField, GridMeta, PhysicalConstants, SpectralDiff,
};
use crate::npde::{candidate_residual, Potential};
use crate::phase::{fit_line, unwrap, unwrapped_arg, Unwrapped};
use crate::report::ResidualReport;
use crate::states::{NonlinearState, OuterFunction, OuterKind};

/// Moduli below this are treated as log branch points.
pub const BRANCH_GUARD: f64 = 1e-12;

/// Largest adjacent phase step accepted by the unwrapper (8 samples per turn).
pub const MAX_PHASE_STEP: f64 = FRAC_PI_4 + 1e-9;

/// Relative power outside the dominant Fourier mode tolerated by
/// [`fit_dispersion`].
pub const SINGLE_MODE_TOL: f64 = 1e-6;

/// A recovered inner field and its unwrapping diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiRecovery {
    pub phi: ComplexField,
    /// Unwrapped `arg φ` along x.
    pub phase: Vec<f64>,
    /// 2π corrections applied to `Im log ψ` and to `arg φ`.
    pub unwrap_jumps: usize,
}

fn guard_resolution(u: &Unwrapped) -> Result<()> {
    if u.max_step > MAX_PHASE_STEP {
        return Err(Error::Resolution { step: u.max_step });
    }
    Ok(())
}

fn recover_with_seeds(
    state: &NonlinearState,
    const_scale: Complex64,
    log_seed: Option<f64>,
    arg_seed: Option<f64>,
) -> Result<PhiRecovery> {
    if !matches!(state.outer().kind, OuterKind::Exp) {
        return Err(Error::UnknownOuter);
    }
    if const_scale.norm() == 0.0 {
        return Err(Error::ZeroScale);
    }
    let ratio: Vec<Complex64> = state
        .composed()
        .values()
        .iter()
        .map(|v| v / const_scale)
        .collect();
    if let Some((index, r)) = ratio
        .iter()
        .enumerate()
        .find(|(_, r)| r.norm() <= BRANCH_GUARD)
    {
        return Err(Error::ZeroCrossing {
            index,
            modulus: r.norm(),
        });
    }
    let im = unwrapped_arg(&ratio, log_seed);
    guard_resolution(&im)?;
    let values: Vec<Complex64> = ratio
        .iter()
        .zip(&im.phase)
        .map(|(r, arg)| Complex64::new(r.norm().ln(), *arg))
        .collect();
    // arg φ is diagnostic here; it is meaningless where φ itself passes near 0
    let arg = unwrapped_arg(&values, arg_seed);
    Ok(PhiRecovery {
        phi: ComplexField::new(*state.grid(), values)?,
        phase: arg.phase,
        unwrap_jumps: im.jumps + arg.jumps,
    })
}

/// `φ = log(ψ/const_scale)` with `Im` unwrapped along x from the principal
/// branch at the first grid point.
pub fn recover_phi(state: &NonlinearState, const_scale: Complex64) -> Result<PhiRecovery> {
    recover_with_seeds(state, const_scale, None, None)
}

/// Recovers a time series of states. The first snapshot is seeded with the
/// principal branch; each later snapshot's first point is placed on the
/// branch nearest the previous snapshot's first point.
pub fn recover_phi_series(
    states: &[NonlinearState],
    const_scale: Complex64,
) -> Result<Vec<PhiRecovery>> {
    let mut out: Vec<PhiRecovery> = Vec::with_capacity(states.len());
    for state in states {
        let seeds = out
            .last()
            .map(|prev| (prev.phi.values()[0].im, prev.phase[0]));
        let rec = recover_with_seeds(state, const_scale, seeds.map(|s| s.0), seeds.map(|s| s.1))?;
        out.push(rec);
    }
    Ok(out)
}

/// Implicit `dφ/dt = −(∂ψ/∂t)_φ / (∂ψ/∂φ)_t` for `ψ(t, φ) = e^{−iαt}·outer(φ)`,
/// both partials by central differences with step `h`.
pub fn implicit_dphi_dt(
    outer_t: &OuterFunction,
    alpha: f64,
    t: f64,
    phi: Complex64,
    h: f64,
) -> Result<Complex64> {
    let psi = |t: f64, phi: Complex64| -> Result<Complex64> {
        Ok(Complex64::from_polar(1.0, -alpha * t) * outer_t.eval(phi)?)
    };
    let dt = (psi(t + h, phi)? - psi(t - h, phi)?) / (2.0 * h);
    let dphi = (psi(t, phi + h)? - psi(t, phi - h)?) / (2.0 * h);
    if dphi.norm() < BRANCH_GUARD {
        return Err(Error::DegenerateDenominator(dphi.norm()));
    }
    Ok(-dt / dphi)
}

/// The level curve `e^{−iαt}·outer(φ(t)) = outer(φ₀)` and its exact slope.
fn constraint(
    outer_t: &OuterFunction,
    alpha: f64,
    phi0: Complex64,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let i = Complex64::i();
    match outer_t.kind {
        OuterKind::Exp => Ok((phi0 + i * alpha * t, i * alpha)),
        OuterKind::Power { beta } => {
            if beta == 0.0 {
                return Err(Error::DegenerateDenominator(0.0));
            }
            let phi = phi0 * Complex64::from_polar(1.0, alpha * t / beta);
            Ok((phi, i * alpha / beta * phi))
        }
    }
}

/// Compares the implicit-formula derivative with the exact slope of the
/// constraint curve through `phi0` at each time, for every step in `steps`.
///
/// The reported residual is the L∞ defect at the smallest step; the measured
/// convergence order over the ladder is recorded as `observed_order`.
pub fn implicit_derivative_check(
    outer_t: &OuterFunction,
    alpha: f64,
    phi0: Complex64,
    times: &[f64],
    steps: &[f64],
    tolerance: f64,
) -> Result<ResidualReport> {
    if times.len() < 5 {
        return Err(Error::SeriesTooShort {
            got: times.len(),
            min: 5,
        });
    }
    if steps.is_empty() {
        return Err(Error::EmptySeries);
    }
    let residuals = steps
        .iter()
        .map(|&h| {
            times
                .iter()
                .map(|&t| {
                    let (phi, exact) = constraint(outer_t, alpha, phi0, t)?;
                    Ok(implicit_dphi_dt(outer_t, alpha, t, phi, h)? - exact)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = residuals
        .iter()
        .map(|r| r.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .collect();
    let finest = steps
        .iter()
        .zip(&residuals)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, r)| r.as_slice())
        .unwrap_or_default();
    let (linf, l2) = residual_norms(finest, (times[1] - times[0]).abs());
    let order = observed_order(steps, &errors);
    Ok(ResidualReport::new(
        "implicit-derivative",
        GridMeta::time_axis(times),
        linf,
        l2,
        tolerance,
    )
    .with_param("alpha", alpha)
    .with_param("steps", steps.to_vec())
    .with_param("errors", errors)
    .with_param("observed_order", order))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub fitted_p: f64,
    #[serde(rename = "fitted_E")]
    pub fitted_e: f64,
    /// `|fitted_E − fitted_p²/2m|`.
    pub dispersion_residual: f64,
    pub unwrap_jumps: usize,
    pub fit_rms: f64,
    /// Grid point used for the temporal phase fit.
    pub x_ref: f64,
}

/// Fraction of `Σ|ĉ_k|²` outside the dominant Fourier coefficient.
pub fn off_mode_fraction(field: &ComplexField) -> Result<f64> {
    let spectral = SpectralDiff::new(field.grid())?;
    let mut buf = field.values().to_vec();
    spectral.forward(&mut buf);
    let powers: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = powers.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let peak = powers.iter().cloned().fold(0.0, f64::max);
    Ok((total - peak) / total)
}

/// Fits `φ(t, x) ∝ exp(i(p·x − E·t)/ħ)` to a series of single-mode fields.
///
/// `p` is the mean spatial phase slope (times ħ) over all snapshots; `E` comes
/// from the temporal phase slope at the grid midpoint.
pub fn fit_dispersion(
    phi_series: &[ComplexField],
    times: &[f64],
    constants: PhysicalConstants,
) -> Result<RecoveryResult> {
    if phi_series.len() != times.len() {
        return Err(Error::SeriesLengthMismatch(phi_series.len(), times.len()));
    }
    if phi_series.len() < 5 {
        return Err(Error::SeriesTooShort {
            got: phi_series.len(),
            min: 5,
        });
    }
    let grid = *phi_series[0].grid();
    for f in phi_series {
        phi_series[0].ensure_same_grid(f)?;
        let off = off_mode_fraction(f)?;
        if off > SINGLE_MODE_TOL {
            return Err(Error::MultiMode(off));
        }
    }
    let hbar = constants.hbar();
    let xs = grid.points();
    let mut jumps = 0;
    let mut rms = 0.0f64;
    let mut slope_sum = 0.0;
    let mut seed = None;
    for f in phi_series {
        let u = unwrapped_arg(f.values(), seed);
        guard_resolution(&u)?;
        seed = Some(u.phase[0]);
        let fit = fit_line(&xs, &u.phase);
        jumps += u.jumps;
        rms = rms.max(fit.rms);
        slope_sum += fit.slope;
    }
    let fitted_p = hbar * slope_sum / phi_series.len() as f64;

    let mid = grid.n() / 2;
    let wrapped: Vec<f64> = phi_series.iter().map(|f| f.values()[mid].arg()).collect();
    let u = unwrap(&wrapped, None);
    guard_resolution(&u)?;
    let fit = fit_line(times, &u.phase);
    jumps += u.jumps;
    rms = rms.max(fit.rms);
    let fitted_e = -hbar * fit.slope;

    Ok(RecoveryResult {
        fitted_p,
        fitted_e,
        dispersion_residual: (fitted_e - fitted_p * fitted_p / (2.0 * constants.mass())).abs(),
        unwrap_jumps: jumps,
        fit_rms: rms,
        x_ref: grid.point(mid),
    })
}

/// `β̂ = slope(unwrapped arg ψ_t) / (−ω)` by least squares.
pub fn estimate_beta(psi_t_series: &[Complex64], omega: f64, times: &[f64]) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if psi_t_series.len() != times.len() {
        return Err(Error::SeriesLengthMismatch(psi_t_series.len(), times.len()));
    }
    if times.len() < 5 {
        return Err(Error::SeriesTooShort {
            got: times.len(),
            min: 5,
        });
    }
    if let Some((index, v)) = psi_t_series
        .iter()
        .enumerate()
        .find(|(_, v)| v.norm() <= BRANCH_GUARD)
    {
        return Err(Error::ZeroCrossing {
            index,
            modulus: v.norm(),
        });
    }
    let u = unwrapped_arg(psi_t_series, None);
    Ok(fit_line(times, &u.phase).slope / -omega)
}

/// Residual of `iħ∂φ/∂t = −(ħ²/2m)∂²φ/∂x²` for a field known as a function
/// of time, at time `t` with time step `dt` (5-point central stencil,
/// spectral Laplacian).
pub fn linear_schrodinger_residual(
    phi_at: impl Fn(f64) -> Result<ComplexField>,
    t: f64,
    dt: f64,
    constants: PhysicalConstants,
    tolerance: f64,
) -> Result<ResidualReport> {
    let r = candidate_residual(phi_at, t, dt, &Potential::Zero, constants)?;
    let (linf, l2) = residual_norms(r.values(), r.grid().spacing());
    Ok(
        ResidualReport::new("linear-schrodinger", r.grid().meta(), linf, l2, tolerance)
            .with_param("t", t)
            .with_param("dt", dt),
    )
}
