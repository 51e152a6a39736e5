//! Acceptance criteria, one PASS/FAIL line each. Built without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::f64::consts::{PI, SQRT_2};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use nqmlab_cli::config::{CheckName, RunConfig};
use nqmlab_cli::suites;
use nqmlab_core::correspondence::{implicit_derivative_check, implicit_dphi_dt};
use nqmlab_core::gridcore::metric_distance;
use nqmlab_core::npde::{
    candidate_residual, evolve_direct, norm_drift, propagator_generator_residual,
    propagator_series, separation_check, EvolutionConfig, EvolutionScheme, Potential,
};
use nqmlab_core::operators::{
    apply, commutator_convergence, commutator_residual, eigen_residual, expectation,
    ExpectationConvention, OperatorSpec,
};
use nqmlab_core::states::{
    free_particle_nonlinear, nonlinear_eigenstate, normalization_constant_delta,
    normalization_constant_momentum, normalize_numeric, plane_wave,
};
use nqmlab_core::{
    Complex64, ComplexField, Grid1D, NonlinearState, OuterFunction, PhysicalConstants,
    PlaneWaveParams, StencilOrder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn eigenvalue_identity() -> Outcome {
    let mut worst = 0.0f64;
    for p in [0.5, 1.0, 2.0, 5.0] {
        let grid = Grid1D::de_broglie_window(p, 1.0, 256, 1).map_err(|e| e.to_string())?;
        let state = nonlinear_eigenstate(p, grid, unit()).map_err(|e| e.to_string())?;
        let report = eigen_residual(&state, p, unit(), 1e-10).map_err(|e| e.to_string())?;
        // Hand-derived: -iħ d/dx [√(ħ/p)·exp(e^{ipx/ħ})] = p·e^{ipx/ħ}·ψ.
        let s = (1.0 / p).sqrt();
        let applied =
            apply(&OperatorSpec::momentum(unit()), state.composed()).map_err(|e| e.to_string())?;
        let closed_form = grid
            .points()
            .iter()
            .zip(applied.values())
            .map(|(&x, v)| {
                let phi = Complex64::from_polar(1.0, p * x);
                (v - p * phi * s * phi.exp()).norm()
            })
            .fold(0.0, f64::max);
        ensure(report.pass && closed_form <= 1e-10, || {
            format!(
                "p={p}: report residual {:.3e}, closed form {closed_form:.3e}",
                report.residual_linf
            )
        })?;
        worst = worst.max(report.residual_linf).max(closed_form);
    }
    Ok(format!("max residual {worst:.2e} over p in {{0.5,1,2,5}}"))
}

fn smooth_state(modes: &[(f64, f64, f64, f64)], n: usize) -> nqmlab_core::Result<NonlinearState> {
    let grid = Grid1D::new(-1.0, 1.0, n, false)?;
    let inner = ComplexField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|&(a, b, k, th)| Complex64::new(a * (k * x + th).cos(), b * (k * x - th).sin()))
            .sum()
    })?;
    NonlinearState::new(OuterFunction::exp(one()), inner)
}

fn commutator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut min_order) = (0.0f64, f64::INFINITY);
    for _ in 0..3 {
        let modes: Vec<_> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let state = smooth_state(&modes, 512).map_err(|e| e.to_string())?;
        for n in 1..=6 {
            let r = commutator_residual(n, &state, unit(), StencilOrder::Eighth, 1e-6)
                .map_err(|e| e.to_string())?;
            let study = commutator_convergence(
                n,
                &[41, 57, 81, 113],
                |size| smooth_state(&modes, size),
                unit(),
                StencilOrder::Eighth,
            )
            .map_err(|e| e.to_string())?;
            let order = study.order.unwrap_or(f64::NAN);
            ensure(r.residual_linf <= 1e-6 && order >= 8.0 - 0.2, || {
                format!("x^{n}: residual {:.3e}, order {order:.3}", r.residual_linf)
            })?;
            worst = worst.max(r.residual_linf);
            min_order = min_order.min(order);
        }
    }
    let config = RunConfig {
        checks: vec![CheckName::Commutator],
        ..RunConfig::default()
    };
    let reports = suites::verify(&config).map_err(|e| e.to_string())?;
    ensure(reports.len() == 6 && reports.iter().all(|r| r.pass), || {
        "verify suite commutator reports did not all pass".into()
    })?;
    Ok(format!(
        "max residual {worst:.2e}, min order {min_order:.3} (n=1..6, fd8)"
    ))
}

fn normalization() -> Outcome {
    let delta = normalization_constant_delta(1.0)
        .map_err(|e| e.to_string())?
        .constant;
    let momentum = normalization_constant_momentum(4.0, unit())
        .map_err(|e| e.to_string())?
        .constant;
    ensure(delta == SQRT_2 && momentum == 0.5, || {
        format!("delta {delta:e}, momentum {momentum:e}")
    })?;
    let grid = Grid1D::de_broglie_window(1.0, 1.0, 256, 1).map_err(|e| e.to_string())?;
    let state = nonlinear_eigenstate(1.0, grid, unit()).map_err(|e| e.to_string())?;
    let numeric = normalize_numeric(state.composed())
        .map_err(|e| e.to_string())?
        .1
        .constant;
    let quadrature = 1.0 / oracle::eigenstate_norm_sq(1.0, 1.0).sqrt();
    let series = 1.0 / (2.0 * PI * oracle::bessel_i(0, 2.0)).sqrt();
    let err = (numeric - quadrature).abs();
    ensure(err <= 1e-8 && (quadrature - series).abs() <= 1e-12, || {
        format!("numeric {numeric:.15}, quadrature {quadrature:.15}, closed form {series:.15}")
    })?;
    Ok(format!(
        "delta = sqrt 2, momentum = 0.5, window constant {numeric:.12} (|err| {err:.1e})"
    ))
}

fn expectation_oracle() -> Outcome {
    let mut notes = Vec::new();
    for p in [0.5, 1.0, 2.0] {
        let grid = Grid1D::de_broglie_window(p, 1.0, 256, 1).map_err(|e| e.to_string())?;
        let state = nonlinear_eigenstate(p, grid, unit()).map_err(|e| e.to_string())?;
        let value = expectation(
            &OperatorSpec::momentum(unit()),
            state.composed(),
            ExpectationConvention::UnitNormWindow,
        )
        .map_err(|e| e.to_string())?;
        let reference = oracle::eigenstate_momentum_expectation(p, 1.0);
        let err = (value - reference).norm();
        ensure(err <= 1e-8, || {
            format!("p={p}: <P> = {value}, oracle {reference:.15}")
        })?;
        notes.push(format!("p={p}: <P>={:.10} vs claimed {p}", value.re));
    }
    Ok(format!(
        "matches p*I1(2)/I0(2); discrepancy vs claim: {}",
        notes.join(", ")
    ))
}

fn npde_defect() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for (p, m) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (3.0, 1.0)] {
        let c = PhysicalConstants::new(1.0, m).map_err(|e| e.to_string())?;
        let params = PlaneWaveParams::free(p, c);
        let grid = Grid1D::de_broglie_window(p, 1.0, 256, 1).map_err(|e| e.to_string())?;
        let dt = 1e-3 / params.omega().max(1.0);
        let residual = candidate_residual(
            |t| {
                Ok(free_particle_nonlinear(&params, grid, t, one())?
                    .composed()
                    .clone())
            },
            0.0,
            dt,
            &Potential::Zero,
            c,
        )
        .map_err(|e| e.to_string())?;
        // Substituting ψ = exp(φ) with φ = A·e^{ipx/ħ}: only -(p²/2m)·φ²·ψ survives.
        let amp = 1.0 / (2.0 * PI).sqrt();
        let deviation = grid
            .points()
            .iter()
            .zip(residual.values())
            .map(|(&x, r)| {
                let phi = Complex64::from_polar(amp, p * x);
                (r + p * p / (2.0 * m) * phi * phi * phi.exp()).norm()
            })
            .fold(0.0, f64::max);
        let linear = candidate_residual(
            |t| plane_wave(&params, grid, t),
            0.0,
            dt,
            &Potential::Zero,
            c,
        )
        .map_err(|e| e.to_string())?
        .norm_linf();
        ensure(deviation <= 1e-6 && linear <= 1e-8, || {
            format!("p={p}, m={m}: defect deviation {deviation:.3e}, linear residual {linear:.3e}")
        })?;
        worst = (worst.0.max(deviation), worst.1.max(linear));
    }
    Ok(format!(
        "defect deviation {:.2e}, identity-outer residual {:.2e}",
        worst.0, worst.1
    ))
}

fn correspondence() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for p in [0.5, 1.0, 2.0, 3.0] {
        for m in [0.5, 1.0, 2.0] {
            let mut config = RunConfig::default();
            config.state.p = p;
            config.constants.mass = m;
            let reports = suites::recover(&config).map_err(|e| e.to_string())?;
            let fit = &reports[0].params;
            let get = |k: &str| fit.get(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            let energy = p * p / (2.0 * m);
            let fit_err = (get("fitted_p") - p)
                .abs()
                .max((get("fitted_E") - energy).abs());
            let dispersion = get("dispersion_residual");
            let schrodinger = reports[1].residual_linf;
            ensure(
                fit_err <= 1e-6 && dispersion <= 1e-6 && schrodinger <= 1e-8,
                || {
                    format!(
                        "p={p}, m={m}: fit {fit_err:.3e}, dispersion {dispersion:.3e}, \
                     linear equation {schrodinger:.3e}"
                    )
                },
            )?;
            worst = (
                worst.0.max(fit_err),
                worst.1.max(dispersion),
                worst.2.max(schrodinger),
            );
        }
    }
    Ok(format!(
        "(p,E) error {:.1e}, dispersion {:.1e}, linear equation {:.1e} over 12 (p,m)",
        worst.0, worst.1, worst.2
    ))
}

fn separation_and_beta() -> Outcome {
    let config = RunConfig::default();
    let betas = &config.betas;
    ensure(
        betas.len() == 21 && betas[0] == 0.25 && betas[20] == 4.0,
        || format!("default sweep is {betas:?}"),
    )?;
    let omega = 0.5;
    let h = 1e-5;
    let times: Vec<f64> = (0..21).map(|k| 0.3 + f64::from(k) * h).collect();
    let mut sep = 0.0f64;
    for &beta in betas {
        let r = separation_check(
            &OuterFunction::power(beta, one()),
            omega,
            omega,
            &times,
            unit(),
        )
        .map_err(|e| e.to_string())?;
        sep = sep.max((r.e_non - beta * omega).norm());
    }
    let sweep = suites::sweep_beta(&config).map_err(|e| e.to_string())?;
    let beta_err = sweep
        .rows
        .iter()
        .map(|(b, bh)| (b - bh).abs())
        .fold(0.0, f64::max);
    ensure(sep <= 1e-8 && beta_err <= 1e-8, || {
        format!("E_non error {sep:.3e}, beta error {beta_err:.3e}")
    })?;
    Ok(format!(
        "E_non error {sep:.2e}, beta-hat error {beta_err:.2e} over 21 betas"
    ))
}

fn unitarity() -> Outcome {
    let grid = Grid1D::de_broglie_window(1.0, 1.0, 256, 1).map_err(|e| e.to_string())?;
    let state = nonlinear_eigenstate(1.0, grid, unit()).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..200).map(|k| 0.37 * f64::from(k)).collect();
    let series =
        propagator_series(state.composed(), 2.0, &times, unit()).map_err(|e| e.to_string())?;
    let prop_drift = norm_drift(&series).map_err(|e| e.to_string())?;
    let generator = propagator_generator_residual(state.composed(), 2.0, 1e-5, 9, unit(), 1e-8)
        .map_err(|e| e.to_string())?;
    let params = PlaneWaveParams::free(1.0, unit());
    let evo = EvolutionConfig {
        dt: 1e-3,
        steps: 1000,
        scheme: EvolutionScheme::SplitStep,
        record_every: 1,
    };
    let run = evolve_direct(
        &plane_wave(&params, grid, 0.0).map_err(|e| e.to_string())?,
        &Potential::Zero,
        &evo,
        unit(),
    )
    .map_err(|e| e.to_string())?;
    let split_drift = norm_drift(&run.snapshots).map_err(|e| e.to_string())?;
    ensure(
        prop_drift <= 1e-14 && split_drift <= 1e-9 && generator.residual_linf <= 1e-8,
        || {
            format!(
                "propagator drift {prop_drift:.3e}, split-step drift {split_drift:.3e}, \
                 generator {:.3e}",
                generator.residual_linf
            )
        },
    )?;
    Ok(format!(
        "propagator drift {prop_drift:.1e}, split-step drift {split_drift:.1e}, generator {:.1e}",
        generator.residual_linf
    ))
}

fn implicit_derivative() -> Outcome {
    let alpha = 0.5;
    let phi0 = Complex64::new(0.2, 0.1);
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let times: Vec<f64> = (1..=9).map(|k| 0.1 * f64::from(k)).collect();
    let mut orders = Vec::new();
    for outer in [OuterFunction::exp(one()), OuterFunction::power(2.0, one())] {
        let r = implicit_derivative_check(&outer, alpha, phi0, &times, &steps, 1e-3)
            .map_err(|e| e.to_string())?;
        let order = r
            .params
            .get("observed_order")
            .and_then(|v| v.as_f64())
            .unwrap_or(f64::NAN);
        ensure(order >= 1.9 && r.pass, || {
            format!("order {order:.3}, residual {:.3e}", r.residual_linf)
        })?;
        orders.push(order);
    }
    // Exp constraint curve φ = φ0 + iαt: dφ/dt = iα exactly.
    let exact = Complex64::new(0.0, alpha);
    let t = 0.4;
    let phi = phi0 + exact * t;
    let errs = steps
        .iter()
        .map(|&h| {
            implicit_dphi_dt(&OuterFunction::exp(one()), alpha, t, phi, h)
                .map(|d| (d - exact).norm())
        })
        .collect::<nqmlab_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let c = errs[0] / (steps[0] * steps[0]);
    ensure(
        errs.iter()
            .zip(steps)
            .all(|(e, h)| *e <= 1.5 * c * h * h + 1e-12),
        || format!("errors {errs:?} are not O(h^2)"),
    )?;
    Ok(format!(
        "orders {:.3} (exp), {:.3} (power 2); |dphi/dt - i*alpha| = {:.1e} at h={}",
        orders[0], orders[1], errs[3], steps[3]
    ))
}

fn random_field(rng: &mut ChaCha8Rng, grid: Grid1D) -> ComplexField {
    let a = rng.gen_range(-3.0..3.0);
    let k = rng.gen_range(-8.0..8.0);
    let values = grid
        .points()
        .iter()
        .map(|&x| Complex64::from_polar(a, k * x) + Complex64::new(rng.gen(), rng.gen()))
        .collect();
    ComplexField::new(grid, values).expect("grid and values agree")
}

fn metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut violations = 0;
    let trials = 1000;
    for trial in 0..trials {
        let grid = Grid1D::new(-1.0, 2.0, 48, trial % 2 == 1).map_err(|e| e.to_string())?;
        let (f, g, h) = (
            random_field(&mut rng, grid),
            random_field(&mut rng, grid),
            random_field(&mut rng, grid),
        );
        let d = |a: &ComplexField, b: &ComplexField| metric_distance(a, b).unwrap();
        let slack = 1e-12;
        let ok = d(&f, &f) <= slack
            && (d(&f, &g) - d(&g, &f)).abs() <= slack
            && d(&f, &h) <= d(&f, &g) + d(&g, &h) + slack
            && d(&f, &g) >= 0.0;
        violations += usize::from(!ok);
    }
    // Constant fields: D = |a − b|·(window length).
    let grid = Grid1D::new(0.0, 2.0, 33, false).map_err(|e| e.to_string())?;
    let a = ComplexField::constant(grid, Complex64::new(1.0, 2.0)).map_err(|e| e.to_string())?;
    let b = ComplexField::constant(grid, Complex64::new(-2.0, -2.0)).map_err(|e| e.to_string())?;
    let constant_err = (metric_distance(&a, &b).map_err(|e| e.to_string())? - 10.0).abs();
    ensure(violations == 0 && constant_err <= 1e-12, || {
        format!("{violations} violations, constant-field error {constant_err:.3e}")
    })?;
    Ok(format!("{trials} random triples, 0 violations"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_nqmlab"))
        .args(args)
        .current_dir(dir)
        .env("NQMLAB_OUT", dir.join("env-out"))
        .output()
        .map_err(|e| e.to_string())?
        .status;
    status
        .code()
        .ok_or_else(|| "terminated by signal".to_string())
}

fn strip_timestamp(text: &str) -> Result<serde_json::Value, String> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    value
        .as_object_mut()
        .ok_or("report is not an object")?
        .remove("timestamp");
    Ok(value)
}

fn cli_contract() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let default = run_cli(dir, &["verify", "--out", "a"])?;
    ensure(default == 0, || format!("default verify exited {default}"))?;
    let first = fs::read_to_string(dir.join("a/verify.json")).map_err(|e| e.to_string())?;
    run_cli(dir, &["verify", "--out", "a"])?;
    let second = fs::read_to_string(dir.join("a/verify.json")).map_err(|e| e.to_string())?;
    ensure(
        strip_timestamp(&first)? == strip_timestamp(&second)?,
        || "reports differ beyond the timestamp".into(),
    )?;

    fs::write(
        dir.join("impossible.json"),
        r#"{"checks": ["commutator"], "tolerances": {"commutator": 1e-30}}"#,
    )
    .map_err(|e| e.to_string())?;
    let impossible = run_cli(
        dir,
        &["verify", "--config", "impossible.json", "--out", "b"],
    )?;
    fs::write(dir.join("broken.json"), r#"{"grid": {"n": "many"#).map_err(|e| e.to_string())?;
    let malformed = run_cli(dir, &["verify", "--config", "broken.json", "--out", "c"])?;
    fs::write(dir.join("typo.json"), r#"{"grid": {"nn": 64}}"#).map_err(|e| e.to_string())?;
    let unknown = run_cli(dir, &["verify", "--config", "typo.json", "--out", "c"])?;
    ensure(impossible == 1 && malformed == 2 && unknown == 2, || {
        format!("impossible tolerance {impossible}, malformed {malformed}, unknown key {unknown}")
    })?;
    Ok("exit codes 0/1/2 as specified; repeated reports identical modulo timestamp".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("nonlinear eigenvalue identity", eigenvalue_identity),
        ("position-momentum commutator", commutator),
        ("normalization constants", normalization),
        ("momentum expectation oracle", expectation_oracle),
        ("nonlinear equation defect", npde_defect),
        ("correspondence pipeline", correspondence),
        ("separation and beta recovery", separation_and_beta),
        ("unitarity", unitarity),
        ("implicit time derivative", implicit_derivative),
        ("metric-space properties", metric),
        ("command-line contract", cli_contract),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
