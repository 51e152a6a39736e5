//! Quantum differential operators acting on sampled fields and on composed
//! nonlinear states.
//!
//! The nonlinear momentum operator is the ordinary `(ħ/i)∂/∂x` applied to
//! `ψ_non = outer(φ)`. By the chain rule it factors as `Â·B̂_Q φ` with
//! `Â = ∂/∂φ` acting on the outer function and `B̂_Q` the linear operator
//! acting on the inner wave; [`apply_nonlinear`] returns both routes so they
//! can be compared.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gridcore::{
    derivative, derivative_open, differentiate_samples, inner_product, residual_norms,
    ComplexField, DiffScheme, PhysicalConstants, StencilOrder,
};
use crate::npde::Potential;
use crate::report::{ConvergenceStudy, ResidualReport};
use crate::states::{normalize_numeric, NonlinearState, OuterKind};

/// Tolerance on `|⟨a_i|a_j⟩ − δ_ij|` accepted by [`measurement`].
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `(ħ/i)∂/∂x`
    Momentum,
    /// `iħ∂/∂t`, applied to time series
    Energy,
    /// multiplication by `xⁿ`, `n ≥ 1`
    PositionPower(u32),
    /// `−(ħ²/2m)∂²/∂x² + V`
    Hamiltonian(Potential),
}

impl OperatorKind {
    fn name(&self) -> &'static str {
        match self {
            Self::Momentum => "momentum",
            Self::Energy => "energy",
            Self::PositionPower(_) => "position-power",
            Self::Hamiltonian(_) => "hamiltonian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub constants: PhysicalConstants,
    pub scheme: DiffScheme,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, constants: PhysicalConstants, scheme: DiffScheme) -> Self {
        Self {
            kind,
            constants,
            scheme,
        }
    }

    pub fn momentum(constants: PhysicalConstants) -> Self {
        Self::new(OperatorKind::Momentum, constants, DiffScheme::Spectral)
    }

    pub fn energy(constants: PhysicalConstants) -> Self {
        // the time axis is always differenced with 4th-order stencils
        Self::new(
            OperatorKind::Energy,
            constants,
            DiffScheme::FiniteDifference(StencilOrder::Fourth),
        )
    }

    pub fn position_power(n: u32) -> Self {
        Self::new(
            OperatorKind::PositionPower(n),
            PhysicalConstants::default(),
            DiffScheme::Spectral,
        )
    }

    pub fn hamiltonian(potential: Potential, constants: PhysicalConstants) -> Self {
        Self::new(
            OperatorKind::Hamiltonian(potential),
            constants,
            DiffScheme::Spectral,
        )
    }
}

/// Applies a spatial operator to a field.
pub fn apply(op: &OperatorSpec, f: &ComplexField) -> Result<ComplexField> {
    let hbar = op.constants.hbar();
    match &op.kind {
        OperatorKind::Momentum => derivative(f, 1, op.scheme)?.scale(-I * hbar),
        OperatorKind::Energy => Err(Error::NeedsTimeSeries("energy")),
        OperatorKind::PositionPower(n) => {
            if *n == 0 {
                return Err(Error::OutOfRange {
                    name: "position power",
                    value: 0,
                    range: "n >= 1",
                });
            }
            f.map(|x, v| v * x.powi(*n as i32))
        }
        OperatorKind::Hamiltonian(potential) => {
            let v = potential.sampled(f.grid())?;
            let kinetic = -hbar * hbar / (2.0 * op.constants.mass());
            let d2 = derivative(f, 2, op.scheme)?;
            let values = d2
                .values()
                .iter()
                .zip(f.values())
                .zip(&v)
                .map(|((d, psi), pot)| d * kinetic + psi * pot)
                .collect();
            ComplexField::new(*f.grid(), values)
        }
    }
}

fn ensure_series(series: &[ComplexField]) -> Result<()> {
    if series.len() < 5 {
        return Err(Error::SeriesTooShort {
            got: series.len(),
            min: 5,
        });
    }
    let grid = series[0].grid();
    if series.iter().any(|s| s.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `iħ∂/∂t` of a uniformly sampled series of fields (4th-order central
/// differences, one-sided closures at both ends).
pub fn apply_energy(
    constants: PhysicalConstants,
    series: &[ComplexField],
    dt: f64,
) -> Result<Vec<ComplexField>> {
    ensure_series(series)?;
    let grid = *series[0].grid();
    let steps = series.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.n()]; steps];
    let mut column = vec![Complex64::new(0.0, 0.0); steps];
    for k in 0..grid.n() {
        for (slot, snap) in column.iter_mut().zip(series) {
            *slot = snap.values()[k];
        }
        let d = differentiate_samples(&column, dt, 1, StencilOrder::Fourth, false)?;
        for (row, dv) in out.iter_mut().zip(d) {
            row[k] = I * constants.hbar() * dv;
        }
    }
    out.into_iter()
        .map(|values| ComplexField::new(grid, values))
        .collect()
}

/// Applies `op` to every snapshot of a series; `Energy` differentiates along
/// the series instead.
pub fn apply_series(
    op: &OperatorSpec,
    series: &[ComplexField],
    dt: f64,
) -> Result<Vec<ComplexField>> {
    match op.kind {
        OperatorKind::Energy => apply_energy(op.constants, series, dt),
        _ => series.iter().map(|f| apply(op, f)).collect(),
    }
}

/// `(direct, factored)`: the operator applied to `ψ_non`, and
/// `outer′(φ)·(op φ)`.
pub fn apply_nonlinear(
    op: &OperatorSpec,
    state: &NonlinearState,
) -> Result<(ComplexField, ComplexField)> {
    match op.kind {
        OperatorKind::Momentum => {}
        OperatorKind::Energy => return Err(Error::NeedsTimeSeries("energy")),
        ref other => return Err(Error::UnsupportedOperator(other.name())),
    }
    let direct = apply(op, state.composed())?;
    let outer_prime = state.outer().derivative_field(state.inner())?;
    let factored = outer_prime.zip_with(&apply(op, state.inner())?, |a, b| a * b)?;
    Ok((direct, factored))
}

/// Time-domain counterpart of [`apply_nonlinear`] for the energy operator.
pub fn apply_nonlinear_series(
    op: &OperatorSpec,
    states: &[NonlinearState],
    dt: f64,
) -> Result<(Vec<ComplexField>, Vec<ComplexField>)> {
    if op.kind != OperatorKind::Energy {
        let mut direct = Vec::with_capacity(states.len());
        let mut factored = Vec::with_capacity(states.len());
        for s in states {
            let (d, f) = apply_nonlinear(op, s)?;
            direct.push(d);
            factored.push(f);
        }
        return Ok((direct, factored));
    }
    let composed: Vec<ComplexField> = states.iter().map(|s| s.composed().clone()).collect();
    let inner: Vec<ComplexField> = states.iter().map(|s| s.inner().clone()).collect();
    let direct = apply_energy(op.constants, &composed, dt)?;
    let op_inner = apply_energy(op.constants, &inner, dt)?;
    let factored = states
        .iter()
        .zip(op_inner)
        .map(|(s, bq)| {
            s.outer()
                .derivative_field(s.inner())?
                .zip_with(&bq, |a, b| a * b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((direct, factored))
}

/// Compares `op(outer(α·φ₁ + β·φ₂))` with `α·op(ψ₁) + β·op(ψ₂)`.
///
/// The outer function of `s1` is used for the combined inner field. A zero
/// defect means the operator acts linearly on these states.
pub fn linearity_defect(
    op: &OperatorSpec,
    s1: &NonlinearState,
    s2: &NonlinearState,
    alpha: Complex64,
    beta: Complex64,
    tolerance: f64,
) -> Result<ResidualReport> {
    s1.inner().ensure_same_grid(s2.inner())?;
    let combined_inner = s1
        .inner()
        .zip_with(s2.inner(), |a, b| alpha * a + beta * b)?;
    let combined = s1.outer().apply(&combined_inner)?;
    let lhs = apply(op, &combined)?;
    let rhs = apply(op, s1.composed())?
        .scale(alpha)?
        .zip_with(&apply(op, s2.composed())?.scale(beta)?, |a, b| a + b)?;
    let residual = lhs.sub(&rhs)?;
    let (linf, l2) = residual_norms(residual.values(), s1.grid().spacing());
    Ok(
        ResidualReport::new("linearity-defect", s1.grid().meta(), linf, l2, tolerance)
            .with_param("operator", op.kind.name())
            .with_param("alpha_re", alpha.re)
            .with_param("alpha_im", alpha.im)
            .with_param("beta_re", beta.re)
            .with_param("beta_im", beta.im),
    )
}

/// Residual of `(ħ/i)∂ψ_non/∂x − p·ψ_non·φ` with spectral differentiation.
///
/// For exponential outers the right-hand side in its expanded closed form,
/// `p·C·exp(i·p·x/ħ + exp(i·p·x/ħ))`, is evaluated as well and its deviation
/// from `(ħ/i)∂ψ_non/∂x` recorded as the `closed_form_rhs_residual` param.
pub fn eigen_residual(
    state: &NonlinearState,
    p_x: f64,
    constants: PhysicalConstants,
    tolerance: f64,
) -> Result<ResidualReport> {
    let grid = *state.grid();
    if !grid.is_periodic() {
        return Err(Error::NonPeriodicGrid("eigen_residual"));
    }
    let op = OperatorSpec::momentum(constants);
    let lhs = apply(&op, state.composed())?;
    let rhs = state
        .composed()
        .zip_with(state.inner(), |psi, phi| psi * phi * p_x)?;
    let residual = lhs.sub(&rhs)?;
    let (linf, l2) = residual_norms(residual.values(), grid.spacing());
    let mut report = ResidualReport::new("eigenvalue", grid.meta(), linf, l2, tolerance)
        .with_param("p_x", p_x)
        .with_param("hbar", constants.hbar())
        .with_param("scheme", "spectral");
    if state.outer().kind == OuterKind::Exp {
        let scale = state.outer().scale;
        let closed = ComplexField::from_fn(grid, |x| {
            let phase = I * (p_x * x / constants.hbar());
            scale * p_x * (phase + phase.exp()).exp()
        })?;
        report.set_param("closed_form_rhs_residual", lhs.sub(&closed)?.norm_linf());
    }
    Ok(report)
}

/// `[xⁿ, P̂]f = xⁿ·P̂f − P̂(xⁿ·f)` with open (non-wrapping) finite differences.
pub fn commutator_apply(
    n: u32,
    f: &ComplexField,
    constants: PhysicalConstants,
    stencil: StencilOrder,
) -> Result<ComplexField> {
    check_power(n)?;
    let momentum = |g: &ComplexField| -> Result<ComplexField> {
        derivative_open(g, 1, stencil)?.scale(-I * constants.hbar())
    };
    let xn = |x: f64| x.powi(n as i32);
    let x_then_p = momentum(&f.map(|x, v| v * xn(x))?)?;
    momentum(f)?.map(|x, v| v * xn(x))?.sub(&x_then_p)
}

fn check_power(n: u32) -> Result<()> {
    if (1..=6).contains(&n) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "commutator power",
            value: i64::from(n),
            range: "1..=6",
        })
    }
}

/// Residual of `[xⁿ, P̂]ψ − iħ·n·xⁿ⁻¹·ψ` on interior points.
///
/// A band of one stencil radius at each end is excluded; its width is
/// recorded in the report params.
pub fn commutator_residual(
    n: u32,
    state: &NonlinearState,
    constants: PhysicalConstants,
    stencil: StencilOrder,
    tolerance: f64,
) -> Result<ResidualReport> {
    let residual = commutator_interior_residual(n, state.composed(), constants, stencil)?;
    let grid = state.grid();
    let (linf, l2) = residual_norms(&residual, grid.spacing());
    Ok(
        ResidualReport::new("commutator", grid.meta(), linf, l2, tolerance)
            .with_param("n", n)
            .with_param("stencil_order", stencil.order() as u64)
            .with_param("band_width", stencil.radius() as u64)
            .with_param("hbar", constants.hbar()),
    )
}

fn commutator_interior_residual(
    n: u32,
    f: &ComplexField,
    constants: PhysicalConstants,
    stencil: StencilOrder,
) -> Result<Vec<Complex64>> {
    let comm = commutator_apply(n, f, constants, stencil)?;
    let grid = f.grid();
    let band = stencil.radius();
    let nf = f64::from(n);
    Ok((band..grid.n() - band)
        .map(|k| {
            let x = grid.point(k);
            let expected = I * constants.hbar() * nf * x.powi(n as i32 - 1) * f.values()[k];
            comm.values()[k] - expected
        })
        .collect())
}

/// Commutator residual measured over a ladder of grid sizes; `build` returns
/// the state sampled on `n` points.
///
/// Every level is measured on the same physical window: the grid extent minus
/// one stencil radius of the coarsest level at each end.
pub fn commutator_convergence(
    n: u32,
    sizes: &[usize],
    build: impl Fn(usize) -> Result<NonlinearState>,
    constants: PhysicalConstants,
    stencil: StencilOrder,
) -> Result<ConvergenceStudy> {
    let states = sizes
        .iter()
        .map(|&s| build(s))
        .collect::<Result<Vec<_>>>()?;
    let margin = states
        .iter()
        .map(|s| s.grid().spacing())
        .fold(0.0, f64::max)
        * stencil.radius() as f64;
    let mut steps = Vec::with_capacity(sizes.len());
    let mut errors = Vec::with_capacity(sizes.len());
    for state in &states {
        let grid = state.grid();
        let (lo, hi) = (grid.x_min() + margin, grid.x_max() - margin);
        let comm = commutator_apply(n, state.composed(), constants, stencil)?;
        let nf = f64::from(n);
        let err = (0..grid.n())
            .map(|k| (k, grid.point(k)))
            .filter(|&(_, x)| x >= lo - 1e-12 && x <= hi + 1e-12)
            .map(|(k, x)| {
                let expected =
                    I * constants.hbar() * nf * x.powi(n as i32 - 1) * state.composed().values()[k];
                (comm.values()[k] - expected).norm()
            })
            .fold(0.0, f64::max);
        steps.push(grid.spacing());
        errors.push(err);
    }
    Ok(ConvergenceStudy::new(steps, errors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationConvention {
    /// Use the field as given (constant supplied by the caller).
    GivenConstant,
    /// Renormalize to `∫|f|² dx = 1` over the grid window first.
    UnitNormWindow,
}

/// `⟨f|Ô|f⟩ = ∫ f*·(Ô f) dx`.
pub fn expectation(
    op: &OperatorSpec,
    f: &ComplexField,
    convention: ExpectationConvention,
) -> Result<Complex64> {
    let field = match convention {
        ExpectationConvention::GivenConstant => f.clone(),
        ExpectationConvention::UnitNormWindow => normalize_numeric(f)?.0,
    };
    inner_product(&field, &apply(op, &field)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub value: f64,
    pub probability: f64,
    pub post_state: ComplexField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcomes: Vec<MeasurementOutcome>,
    /// `Σ probability`; below one when the basis is truncated.
    pub total_probability: f64,
}

/// Born-rule probabilities `|⟨a_j|ψ⟩|²` against a caller-supplied
/// orthonormal eigenbasis. `ψ` is normalized over the grid window first; the
/// post-measurement state of outcome `j` is `a_j` itself.
pub fn measurement(
    state: &ComplexField,
    eigenbasis: &[ComplexField],
    eigenvalues: &[f64],
) -> Result<Measurement> {
    if eigenbasis.len() != eigenvalues.len() {
        return Err(Error::EigenvalueCount(eigenvalues.len(), eigenbasis.len()));
    }
    for (i, a) in eigenbasis.iter().enumerate() {
        for (j, b) in eigenbasis.iter().enumerate().skip(i) {
            let ip = inner_product(a, b)?;
            let target = if i == j { 1.0 } else { 0.0 };
            let defect = (ip - target).norm();
            if defect > ORTHONORMALITY_TOL {
                return Err(Error::NonOrthonormal { i, j, defect });
            }
        }
    }
    let (psi, _) = normalize_numeric(state)?;
    let outcomes = eigenbasis
        .iter()
        .zip(eigenvalues)
        .map(|(a, &value)| {
            let amp = inner_product(a, &psi)?;
            Ok(MeasurementOutcome {
                value,
                probability: amp.norm_sqr().clamp(0.0, 1.0),
                post_state: a.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_probability = outcomes.iter().map(|o| o.probability).sum();
    Ok(Measurement {
        outcomes,
        total_probability,
    })
}
