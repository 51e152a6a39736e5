//! Named checks and the four subcommand drivers.

use std::f64::consts::SQRT_2;

use nqmlab_core::correspondence::{
    estimate_beta, fit_dispersion, implicit_derivative_check, linear_schrodinger_residual,
    recover_phi, recover_phi_series,
};
use nqmlab_core::gridcore::metric_distance;
use nqmlab_core::npde::{
    beta_ode_residual, candidate_residual, divergence, evolve_direct, evolve_induced, norm_drift,
    plane_wave_defect, propagator_generator_residual, propagator_series, q1_potential,
    separation_check, ActionField, EvolutionConfig, EvolutionScheme, Potential,
};
use nqmlab_core::operators::{
    apply_nonlinear, commutator_convergence, commutator_residual, eigen_residual, expectation,
    ExpectationConvention, OperatorSpec,
};
use nqmlab_core::special::bessel_i;
use nqmlab_core::states::{
    free_particle_nonlinear, nonlinear_eigenstate, normalization_constant_delta,
    normalization_constant_momentum, normalize_numeric, plane_wave, time_factor,
};
use nqmlab_core::{
    Complex64, ComplexField, Grid1D, GridMeta, NonlinearState, OuterFunction, PhysicalConstants,
    PlaneWaveParams, ResidualReport, StencilOrder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CheckName, RunConfig, StateKind};
use crate::error::CliError;

type Checks = Result<Vec<ResidualReport>, CliError>;

/// Quantities shared by most checks, derived once from the config.
struct Setup {
    consts: PhysicalConstants,
    p: f64,
    grid: Grid1D,
    params: PlaneWaveParams,
    scale: Complex64,
}

impl Setup {
    fn new(config: &RunConfig) -> Result<Self, CliError> {
        let consts = PhysicalConstants::new(config.constants.hbar, config.constants.mass)?;
        let p = config.state.p;
        let grid = Grid1D::de_broglie_window(p, consts.hbar(), config.grid.n, config.grid.periods)?;
        let [re, im] = config.state.const_scale;
        Ok(Self {
            consts,
            p,
            grid,
            params: PlaneWaveParams::free(p, consts),
            scale: Complex64::new(re, im),
        })
    }

    fn omega(&self) -> f64 {
        self.params.omega()
    }

    /// Time step for finite differences in t that keeps `ω·dt` small.
    fn fd_time_step(&self, base: f64, rate: f64) -> f64 {
        base / rate.abs().max(1.0)
    }

    fn free_state(&self, t: f64) -> nqmlab_core::Result<NonlinearState> {
        free_particle_nonlinear(&self.params, self.grid, t, self.scale)
    }
}

/// The configured initial state and the plane-wave parameters of its inner
/// field.
fn initial_state(
    config: &RunConfig,
    s: &Setup,
) -> Result<(NonlinearState, PlaneWaveParams), CliError> {
    Ok(match config.state.kind {
        StateKind::Eigenstate => (
            nonlinear_eigenstate(s.p, s.grid, s.consts)?,
            s.params.with_amplitude(1.0),
        ),
        StateKind::FreeParticle => (s.free_state(0.0)?, s.params),
        StateKind::CustomBeta => (
            NonlinearState::new(
                OuterFunction::power(config.state.beta, s.scale),
                plane_wave(&s.params, s.grid, 0.0)?,
            )?,
            s.params,
        ),
    })
}

fn eigenvalue(config: &RunConfig, s: &Setup) -> Checks {
    let state = nonlinear_eigenstate(s.p, s.grid, s.consts)?;
    Ok(vec![eigen_residual(
        &state,
        s.p,
        s.consts,
        config.tolerances.eigenvalue,
    )?])
}

fn refinement_ladder(stencil: StencilOrder) -> &'static [usize] {
    match stencil {
        StencilOrder::Second => &[41, 81, 161, 321],
        StencilOrder::Fourth | StencilOrder::Eighth => &[41, 57, 81, 113],
    }
}

/// Inner field `Σ a·sin(kx + θ) + i·b·cos(kx + θ)` with random modes.
fn random_smooth_state(
    modes: &[(f64, f64, f64, f64)],
    n: usize,
) -> nqmlab_core::Result<NonlinearState> {
    let grid = Grid1D::new(-1.0, 1.0, n, false)?;
    let inner = ComplexField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|&(a, b, k, th)| Complex64::new(a * (k * x + th).sin(), b * (k * x + th).cos()))
            .sum()
    })?;
    NonlinearState::new(OuterFunction::exp(Complex64::new(1.0, 0.0)), inner)
}

fn commutator(config: &RunConfig, s: &Setup) -> Checks {
    let spec = &config.commutator;
    let stencil = StencilOrder::from_order(spec.stencil_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let state = random_smooth_state(&modes, spec.grid_n)?;
    let ladder = refinement_ladder(stencil);
    let min_order = stencil.order() as f64 - config.tolerances.commutator_order;
    spec.powers
        .iter()
        .map(|&n| {
            let report =
                commutator_residual(n, &state, s.consts, stencil, config.tolerances.commutator)?;
            let study = commutator_convergence(
                n,
                ladder,
                |size| random_smooth_state(&modes, size),
                s.consts,
                stencil,
            )?;
            Ok(report
                .with_param("seed", config.seed)
                .with_param("observed_order", study.order)
                .with_param("refinement_sizes", ladder.to_vec())
                .with_param("refinement_errors", study.errors)
                .require(
                    "observed_order",
                    study.order.is_some_and(|o| o >= min_order),
                ))
        })
        .collect()
}

fn normalization(config: &RunConfig, s: &Setup) -> Checks {
    let delta = normalization_constant_delta(1.0)?.constant;
    let momentum = normalization_constant_momentum(4.0, PhysicalConstants::default())?.constant;
    let state = nonlinear_eigenstate(s.p, s.grid, s.consts)?;
    let (_, numeric) = normalize_numeric(state.composed())?;
    let norm_sq = s.consts.hbar() / s.p.abs() * s.grid.length() * bessel_i(0, 2.0);
    let reference = 1.0 / norm_sq.sqrt();
    let deviations = [
        (delta - SQRT_2).abs(),
        (momentum - 0.5).abs(),
        (numeric.constant - reference).abs(),
    ];
    let linf = deviations.iter().cloned().fold(0.0, f64::max);
    let l2 = deviations.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(vec![ResidualReport::new(
        "normalization",
        s.grid.meta(),
        linf,
        l2,
        config.tolerances.normalization,
    )
    .with_param("delta_constant", delta)
    .with_param("momentum_constant", momentum)
    .with_param("numeric_constant", numeric.constant)
    .with_param("numeric_reference", reference)])
}

fn expectation_check(config: &RunConfig, s: &Setup) -> Checks {
    let state = nonlinear_eigenstate(s.p, s.grid, s.consts)?;
    let value = expectation(
        &OperatorSpec::momentum(s.consts),
        state.composed(),
        ExpectationConvention::UnitNormWindow,
    )?;
    let given = expectation(
        &OperatorSpec::momentum(s.consts),
        state.composed(),
        ExpectationConvention::GivenConstant,
    )?;
    let reference = s.p * bessel_i(1, 2.0) / bessel_i(0, 2.0);
    let residual = (value - reference).norm();
    Ok(vec![ResidualReport::new(
        "expectation",
        s.grid.meta(),
        residual,
        residual,
        config.tolerances.expectation,
    )
    .with_param("value_re", value.re)
    .with_param("value_im", value.im)
    .with_param("reference", reference)
    .with_param("given_constant_value_re", given.re)
    .with_param("given_constant_value_im", given.im)
    .with_param("claimed_value", s.p)
    .with_param("discrepancy_vs_claim", (value.re - s.p).abs())])
}

fn chain_rule(config: &RunConfig, s: &Setup) -> Checks {
    let (state, _) = initial_state(config, s)?;
    let (direct, factored) = apply_nonlinear(&OperatorSpec::momentum(s.consts), &state)?;
    let diff = direct.sub(&factored)?;
    Ok(vec![ResidualReport::new(
        "chain-rule",
        s.grid.meta(),
        diff.norm_linf(),
        diff.norm_l2(),
        config.tolerances.chain_rule,
    )
    .with_param("operator", "momentum")])
}

fn separation(config: &RunConfig, s: &Setup) -> Checks {
    let beta = config.state.beta;
    let omega = s.omega();
    let h = s.fd_time_step(1e-5, omega);
    let times: Vec<f64> = (0..21).map(|k| 0.3 + f64::from(k) * h).collect();
    let energy = s.params.energy;
    let result = separation_check(
        &OuterFunction::power(beta, Complex64::new(1.0, 0.0)),
        omega,
        energy,
        &times,
        s.consts,
    )?;
    let expected = beta * s.consts.hbar() * omega;
    let spread = result.residual_profile.iter().cloned().fold(0.0, f64::max);
    let linf = (result.e_non - expected).norm().max(spread);
    Ok(vec![ResidualReport::new(
        "separation",
        GridMeta::time_axis(&times),
        linf,
        linf,
        config.tolerances.separation,
    )
    .with_param("beta", beta)
    .with_param("e_non_re", result.e_non.re)
    .with_param("e_non_im", result.e_non.im)
    .with_param("expected", expected)
    .with_param("beta_non", result.beta_non)])
}

fn beta_ode(config: &RunConfig, s: &Setup) -> Checks {
    let beta = config.state.beta;
    let omega = s.omega();
    let dt = s.fd_time_step(1e-3, beta * omega);
    let one = Complex64::new(1.0, 0.0);
    let times: Vec<f64> = (0..50).map(|k| f64::from(k) * dt).collect();
    let phi: Vec<Complex64> = times
        .iter()
        .map(|&t| time_factor(1.0, omega, t, one))
        .collect();
    let psi: Vec<Complex64> = times
        .iter()
        .map(|&t| time_factor(beta, omega, t, s.scale))
        .collect();
    Ok(vec![beta_ode_residual(
        &psi,
        &phi,
        beta,
        dt,
        config.tolerances.beta_ode,
    )?
    .with_param("omega", omega)])
}

fn propagator(config: &RunConfig, s: &Setup) -> Checks {
    let state = nonlinear_eigenstate(s.p, s.grid, s.consts)?;
    let e_non = config.state.beta * s.params.energy;
    let dt = s.fd_time_step(1e-5, e_non / s.consts.hbar());
    let report = propagator_generator_residual(
        state.composed(),
        e_non,
        dt,
        9,
        s.consts,
        config.tolerances.propagator,
    )?;
    let long_times: Vec<f64> = (0..100).map(|k| 0.37 * f64::from(k)).collect();
    let drift = norm_drift(&propagator_series(
        state.composed(),
        e_non,
        &long_times,
        s.consts,
    )?)?;
    Ok(vec![report.with_param("long_norm_drift", drift).require(
        "long_norm_drift",
        drift <= config.tolerances.propagator_norm,
    )])
}

fn unitarity(config: &RunConfig, s: &Setup) -> Checks {
    let initial = plane_wave(&s.params, s.grid, 0.0)?;
    let evo = EvolutionConfig {
        dt: 1e-3,
        steps: 1000,
        scheme: EvolutionScheme::SplitStep,
        record_every: 100,
    };
    let run = evolve_direct(&initial, &Potential::Zero, &evo, s.consts)?;
    let drift = norm_drift(&run.snapshots)?;
    let exact = plane_wave(&s.params, s.grid, evo.total_time())?;
    let final_error = run
        .snapshots
        .last()
        .map_or(Ok(0.0), |f| f.sub(&exact).map(|d| d.norm_linf()))?;
    Ok(vec![ResidualReport::new(
        "unitarity",
        s.grid.meta(),
        drift,
        drift,
        config.tolerances.unitarity,
    )
    .with_param("steps", evo.steps as u64)
    .with_param("dt", evo.dt)
    .with_param("final_error_vs_exact", final_error)])
}

fn implicit_derivative(config: &RunConfig, s: &Setup) -> Checks {
    let alpha = s.omega();
    let h0 = s.fd_time_step(0.1, alpha);
    let steps = [h0, h0 / 2.0, h0 / 4.0, h0 / 8.0];
    let times: Vec<f64> = (1..=9).map(|k| 0.1 * f64::from(k)).collect();
    let report = implicit_derivative_check(
        &OuterFunction::exp(Complex64::new(1.0, 0.0)),
        alpha,
        Complex64::new(0.2, 0.1),
        &times,
        &steps,
        config.tolerances.implicit_derivative,
    )?;
    let order = report.params.get("observed_order").and_then(|v| v.as_f64());
    let min = config.tolerances.implicit_min_order;
    Ok(vec![report.require(
        "observed_order",
        order.is_some_and(|o| o >= min),
    )])
}

fn npde_defect(config: &RunConfig, s: &Setup) -> Checks {
    let dt = s.fd_time_step(1e-3, s.omega());
    let residual = candidate_residual(
        |t| Ok(s.free_state(t)?.composed().clone()),
        0.0,
        dt,
        &Potential::Zero,
        s.consts,
    )?;
    let oracle = plane_wave_defect(&OuterFunction::exp(s.scale), &s.params, s.grid, 0.0)?;
    let deviation = residual.sub(&oracle)?;
    let defect = ResidualReport::new(
        "npde-defect",
        s.grid.meta(),
        deviation.norm_linf(),
        deviation.norm_l2(),
        config.tolerances.npde_defect,
    )
    .with_param("residual_linf", residual.norm_linf())
    .with_param("closed_form_linf", oracle.norm_linf())
    .with_param("dt", dt);
    let linear = candidate_residual(
        |t| plane_wave(&s.params, s.grid, t),
        0.0,
        dt,
        &Potential::Zero,
        s.consts,
    )?;
    let linear = ResidualReport::new(
        "npde-linear",
        s.grid.meta(),
        linear.norm_linf(),
        linear.norm_l2(),
        config.tolerances.npde_linear,
    )
    .with_param("outer", "power(1)")
    .with_param("dt", dt);
    Ok(vec![defect, linear])
}

fn q1(config: &RunConfig, s: &Setup) -> Checks {
    let state = s.free_state(0.0)?;
    let action = ActionField::plane_wave(&s.params, s.grid, 0.0);
    let q = q1_potential(&state, &action, s.consts, StencilOrder::Fourth)?;
    let sampled = ActionField::from_phase(state.inner(), s.consts);
    let q_sampled = q1_potential(&state, &sampled, s.consts, StencilOrder::Fourth)?;
    Ok(vec![ResidualReport::new(
        "q1",
        s.grid.meta(),
        q.norm_linf(),
        q.norm_l2(),
        config.tolerances.q1,
    )
    .with_param("action", "analytic-plane-wave")
    .with_param(
        "unwrapped_phase_action_linf",
        q_sampled.norm_linf(),
    )])
}

fn correspondence(config: &RunConfig, s: &Setup) -> Checks {
    let times: Vec<f64> = (0..config.recovery.samples)
        .map(|k| k as f64 * config.recovery.dt)
        .collect();
    let states = times
        .iter()
        .map(|&t| s.free_state(t))
        .collect::<nqmlab_core::Result<Vec<_>>>()?;
    let recovered = recover_phi_series(&states, s.scale)?;
    let recovery_jumps: usize = recovered.iter().map(|r| r.unwrap_jumps).sum();
    let phis: Vec<ComplexField> = recovered.into_iter().map(|r| r.phi).collect();
    let fit = fit_dispersion(&phis, &times, s.consts)?;
    let energy = s.params.energy;
    let linf = (fit.fitted_p - s.p)
        .abs()
        .max((fit.fitted_e - energy).abs())
        .max(fit.dispersion_residual);
    let mut report = ResidualReport::new(
        "correspondence",
        s.grid.meta(),
        linf,
        linf,
        config.tolerances.correspondence,
    )
    .with_param("p", s.p)
    .with_param("E", energy)
    .with_param("recovery_unwrap_jumps", recovery_jumps as u64);
    if let Ok(serde_json::Value::Object(fields)) = serde_json::to_value(fit) {
        for (k, v) in fields {
            report.set_param(&k, v);
        }
    }
    Ok(vec![report])
}

fn linear_schrodinger(config: &RunConfig, s: &Setup) -> Checks {
    let t = 0.5 * config.recovery.dt * (config.recovery.samples - 1) as f64;
    let dt = s.fd_time_step(1e-3, s.omega());
    Ok(vec![linear_schrodinger_residual(
        |t| Ok(recover_phi(&s.free_state(t)?, s.scale)?.phi),
        t,
        dt,
        s.consts,
        config.tolerances.linear_schrodinger,
    )?])
}

fn random_field(rng: &mut ChaCha8Rng, grid: Grid1D) -> nqmlab_core::Result<ComplexField> {
    let a: f64 = rng.gen_range(-2.0..2.0);
    let k: f64 = rng.gen_range(0.0..6.0);
    let noise: f64 = rng.gen_range(0.0..1.0);
    let values = grid
        .points()
        .iter()
        .map(|&x| {
            Complex64::from_polar(a, k * x)
                + noise * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    ComplexField::new(grid, values)
}

pub const METRIC_TRIALS: usize = 1000;

fn metric(config: &RunConfig) -> Checks {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut worst = 0.0f64;
    let mut grid = Grid1D::new(0.0, 3.0, 64, true)?;
    for trial in 0..METRIC_TRIALS {
        grid = Grid1D::new(0.0, 3.0, 64, trial % 2 == 0)?;
        let f = random_field(&mut rng, grid)?;
        let g = random_field(&mut rng, grid)?;
        let h = random_field(&mut rng, grid)?;
        let fg = metric_distance(&f, &g)?;
        let excess = [
            metric_distance(&f, &f)?.abs(),
            (fg - metric_distance(&g, &f)?).abs(),
            metric_distance(&f, &h)? - fg - metric_distance(&g, &h)?,
            -fg,
        ];
        worst = excess.iter().cloned().fold(worst, f64::max);
    }
    Ok(vec![ResidualReport::new(
        "metric",
        grid.meta(),
        worst,
        worst,
        config.tolerances.metric,
    )
    .with_param("trials", METRIC_TRIALS as u64)])
}

fn run_check(name: CheckName, config: &RunConfig, s: &Setup) -> Checks {
    match name {
        CheckName::Eigenvalue => eigenvalue(config, s),
        CheckName::Commutator => commutator(config, s),
        CheckName::Normalization => normalization(config, s),
        CheckName::Expectation => expectation_check(config, s),
        CheckName::ChainRule => chain_rule(config, s),
        CheckName::Separation => separation(config, s),
        CheckName::BetaOde => beta_ode(config, s),
        CheckName::Propagator => propagator(config, s),
        CheckName::Unitarity => unitarity(config, s),
        CheckName::ImplicitDerivative => implicit_derivative(config, s),
        CheckName::NpdeDefect => npde_defect(config, s),
        CheckName::Q1 => q1(config, s),
        CheckName::Correspondence => correspondence(config, s),
        CheckName::LinearSchrodinger => linear_schrodinger(config, s),
        CheckName::Metric => metric(config),
    }
}

/// Runs the selected checks; independent checks run on separate threads and
/// are reassembled in selection order.
pub fn verify(config: &RunConfig) -> Checks {
    let setup = Setup::new(config)?;
    let results: Vec<Checks> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .checks
            .iter()
            .map(|&name| {
                let setup = &setup;
                scope.spawn(move || run_check(name, config, setup))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check thread panicked"))
            .collect()
    });
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    Ok(reports)
}

pub struct EvolveOutput {
    pub reports: Vec<ResidualReport>,
    pub direct_csv: String,
    pub induced_csv: String,
    pub divergence_csv: String,
}

pub fn evolve(config: &RunConfig) -> Result<EvolveOutput, CliError> {
    let s = Setup::new(config)?;
    let (state, params) = initial_state(config, &s)?;
    let spec = config.evolution;
    let evo = EvolutionConfig {
        dt: spec.dt,
        steps: spec.steps,
        scheme: spec.scheme,
        record_every: spec.record_every,
    };
    let direct = evolve_direct(state.composed(), &Potential::Zero, &evo, s.consts)?;
    let induced = evolve_induced(&state, &Potential::Zero, &evo, s.consts)?;
    let induced_fields = induced.composed();
    let rows = divergence(&direct.times, &direct.snapshots, &induced_fields)?;

    let drift = norm_drift(&direct.snapshots)?;
    let unitarity = ResidualReport::new(
        "unitarity",
        s.grid.meta(),
        drift,
        drift,
        config.tolerances.unitarity,
    )
    .with_param("steps", spec.steps as u64)
    .with_param("dt", spec.dt)
    .with_param("induced_norm_drift", norm_drift(&induced_fields)?);

    let oracle_rate =
        plane_wave_defect(state.outer(), &params, s.grid, 0.0)?.norm_linf() / s.consts.hbar();
    let (t1, d1) = rows.get(1).copied().unwrap_or((0.0, 0.0));
    let measured_rate = if t1 > 0.0 { d1 / t1 } else { 0.0 };
    let deviation = if oracle_rate > 0.0 {
        (measured_rate - oracle_rate).abs() / oracle_rate
    } else {
        measured_rate
    };
    let final_divergence = rows.last().map_or(0.0, |r| r.1);
    let rate = ResidualReport::new(
        "divergence-rate",
        GridMeta::time_axis(&direct.times),
        deviation,
        deviation,
        config.tolerances.divergence_rate,
    )
    .with_param("measured_rate", measured_rate)
    .with_param("closed_form_rate", oracle_rate)
    .with_param("first_record_time", t1)
    .with_param("final_divergence", final_divergence)
    .with_param("snapshots", direct.times.len() as u64);

    Ok(EvolveOutput {
        reports: vec![unitarity, rate],
        direct_csv: crate::output::series_csv(&direct.times, &direct.snapshots),
        induced_csv: crate::output::series_csv(&induced.times, &induced_fields),
        divergence_csv: crate::output::divergence_csv(&rows),
    })
}

pub fn recover(config: &RunConfig) -> Checks {
    let s = Setup::new(config)?;
    let mut reports = correspondence(config, &s)?;
    reports.extend(linear_schrodinger(config, &s)?);
    Ok(reports)
}

pub struct SweepOutput {
    pub reports: Vec<ResidualReport>,
    pub rows: Vec<(f64, f64)>,
}

pub fn sweep_beta(config: &RunConfig) -> Result<SweepOutput, CliError> {
    if config.betas.is_empty() {
        return Err(CliError::Config("betas must not be empty".into()));
    }
    let s = Setup::new(config)?;
    let omega = s.omega();
    let beta_max = config.betas.iter().cloned().fold(0.0, f64::max);
    let dt = 0.25 / (beta_max * omega.abs());
    let times: Vec<f64> = (0..41).map(|k| f64::from(k) * dt).collect();
    let mut rows = Vec::with_capacity(config.betas.len());
    let mut reports = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        let series: Vec<Complex64> = times
            .iter()
            .map(|&t| time_factor(beta, omega, t, s.scale))
            .collect();
        let beta_hat = estimate_beta(&series, omega, &times)?;
        let error = (beta - beta_hat).abs();
        rows.push((beta, beta_hat));
        reports.push(
            ResidualReport::new(
                "beta-estimate",
                GridMeta::time_axis(&times),
                error,
                error,
                config.tolerances.beta_estimate,
            )
            .with_param("beta", beta)
            .with_param("beta_hat", beta_hat),
        );
    }
    Ok(SweepOutput { reports, rows })
}
