//! Run configuration: JSON file, command-line overrides and validation.

use std::path::{Path, PathBuf};

use nqmlab_core::npde::EvolutionScheme;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_ENV: &str = "NQMLAB_OUT";
pub const DEFAULT_OUT: &str = "nqmlab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub constants: ConstantsSpec,
    pub grid: GridSpec,
    pub state: StateSpec,
    pub evolution: EvolutionSpec,
    pub checks: Vec<CheckName>,
    pub commutator: CommutatorSpec,
    pub recovery: RecoverySpec,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub output: OutputSpec,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            constants: ConstantsSpec::default(),
            grid: GridSpec::default(),
            state: StateSpec::default(),
            evolution: EvolutionSpec::default(),
            checks: CheckName::ALL.to_vec(),
            commutator: CommutatorSpec::default(),
            recovery: RecoverySpec::default(),
            betas: (0..21).map(|k| 0.25 + 0.1875 * f64::from(k)).collect(),
            seed: 7,
            output: OutputSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsSpec {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

/// Spatial window: `periods` de Broglie wavelengths sampled with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub periods: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 256, periods: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Eigenstate,
    FreeParticle,
    CustomBeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSpec {
    pub kind: StateKind,
    pub p: f64,
    pub beta: f64,
    /// `[re, im]`
    pub const_scale: [f64; 2],
}

impl Default for StateSpec {
    fn default() -> Self {
        Self {
            kind: StateKind::FreeParticle,
            p: 1.0,
            beta: 2.0,
            const_scale: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSpec {
    pub dt: f64,
    pub steps: usize,
    pub scheme: EvolutionScheme,
    pub record_every: usize,
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            steps: 100,
            scheme: EvolutionScheme::SplitStep,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorSpec {
    pub powers: Vec<u32>,
    pub grid_n: usize,
    pub stencil_order: usize,
}

impl Default for CommutatorSpec {
    fn default() -> Self {
        Self {
            powers: (1..=6).collect(),
            grid_n: 512,
            stencil_order: 8,
        }
    }
}

/// Time sampling of the recovered series used for the dispersion fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverySpec {
    pub samples: usize,
    pub dt: f64,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self {
            samples: 9,
            dt: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Eigenvalue,
    Commutator,
    Normalization,
    Expectation,
    ChainRule,
    Separation,
    BetaOde,
    Propagator,
    Unitarity,
    ImplicitDerivative,
    NpdeDefect,
    Q1,
    Correspondence,
    LinearSchrodinger,
    Metric,
}

impl CheckName {
    pub const ALL: [CheckName; 15] = [
        Self::Eigenvalue,
        Self::Commutator,
        Self::Normalization,
        Self::Expectation,
        Self::ChainRule,
        Self::Separation,
        Self::BetaOde,
        Self::Propagator,
        Self::Unitarity,
        Self::ImplicitDerivative,
        Self::NpdeDefect,
        Self::Q1,
        Self::Correspondence,
        Self::LinearSchrodinger,
        Self::Metric,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Tolerances {
    pub eigenvalue: f64,
    pub commutator: f64,
    /// Allowed shortfall of the measured refinement order below the stencil order.
    pub commutator_order: f64,
    pub normalization: f64,
    pub expectation: f64,
    pub chain_rule: f64,
    pub separation: f64,
    pub beta_ode: f64,
    pub propagator: f64,
    pub propagator_norm: f64,
    pub unitarity: f64,
    pub implicit_derivative: f64,
    /// Minimum measured refinement order of the implicit derivative.
    pub implicit_min_order: f64,
    pub npde_defect: f64,
    pub npde_linear: f64,
    pub q1: f64,
    pub correspondence: f64,
    pub linear_schrodinger: f64,
    pub metric: f64,
    /// Relative error of the initial direct/induced separation rate.
    pub divergence_rate: f64,
    pub beta_estimate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigenvalue: 1e-10,
            commutator: 1e-6,
            commutator_order: 0.2,
            normalization: 1e-8,
            expectation: 1e-8,
            chain_rule: 1e-10,
            separation: 1e-8,
            beta_ode: 1e-8,
            propagator: 1e-8,
            propagator_norm: 1e-14,
            unitarity: 1e-9,
            implicit_derivative: 1e-3,
            implicit_min_order: 1.9,
            npde_defect: 1e-6,
            npde_linear: 1e-8,
            q1: 1e-12,
            correspondence: 1e-6,
            linear_schrodinger: 1e-8,
            metric: 1e-12,
            divergence_rate: 0.05,
            beta_estimate: 1e-8,
        }
    }
}

impl Tolerances {
    /// Sets one tolerance by its config-file name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        let mut map = match serde_json::to_value(*self) {
            Ok(serde_json::Value::Object(map)) => map,
            _ => unreachable!("tolerances serialize to an object"),
        };
        if !map.contains_key(name) {
            return Err(CliError::Config(format!("unknown tolerance `{name}`")));
        }
        map.insert(name.to_string(), value.into());
        *self = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| CliError::Config(format!("tolerance `{name}`: {e}")))?;
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let serde_json::Value::Object(map) = serde_json::to_value(*self).unwrap_or_default() else {
            unreachable!("tolerances serialize to an object")
        };
        for (name, value) in map {
            match value.as_f64() {
                Some(v) if v.is_finite() && v > 0.0 => {}
                _ => {
                    return Err(CliError::Config(format!(
                        "tolerances.{name} must be a positive finite number"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_n: Option<usize>,
    pub p: Option<f64>,
    pub mass: Option<f64>,
    pub hbar: Option<f64>,
    pub tolerances: Vec<(String, f64)>,
}

/// Parses `name=value` from `--tol`.
pub fn parse_tolerance(arg: &str) -> Result<(String, f64), String> {
    let (name, value) = arg
        .split_once('=')
        .ok_or_else(|| format!("expected <name>=<real>, got `{arg}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("tolerance `{name}` is not a number: `{value}`"))?;
    Ok((name.trim().to_string(), value))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.inner()))
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads the file (if any), applies flags and the output-directory
    /// environment default, then validates.
    pub fn resolve(
        file: Option<&Path>,
        overrides: &Overrides,
        env_out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let mut config = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(n) = overrides.grid_n {
            config.grid.n = n;
        }
        if let Some(p) = overrides.p {
            config.state.p = p;
        }
        if let Some(mass) = overrides.mass {
            config.constants.mass = mass;
        }
        if let Some(hbar) = overrides.hbar {
            config.constants.hbar = hbar;
        }
        for (name, value) in &overrides.tolerances {
            config.tolerances.set(name, *value)?;
        }
        if let Some(out) = &overrides.out {
            config.output.dir = Some(out.clone());
        } else if config.output.dir.is_none() {
            config.output.dir = Some(env_out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.constants.hbar) || !positive(self.constants.mass) {
            return bad("constants.hbar and constants.mass must be positive");
        }
        if self.grid.n < 8 {
            return bad("grid.n must be at least 8");
        }
        if self.grid.periods == 0 {
            return bad("grid.periods must be at least 1");
        }
        if !self.state.p.is_finite() || self.state.p == 0.0 {
            return bad("state.p must be finite and non-zero");
        }
        if !positive(self.state.beta) {
            return bad("state.beta must be positive");
        }
        // A non-integer power of a plane wave jumps at the principal branch cut.
        if self.state.kind == StateKind::CustomBeta && self.state.beta.fract() != 0.0 {
            return bad("a custom-beta state needs an integer state.beta");
        }
        let [re, im] = self.state.const_scale;
        if !(re.is_finite() && im.is_finite()) || (re == 0.0 && im == 0.0) {
            return bad("state.const_scale must be finite and non-zero");
        }
        if !positive(self.evolution.dt)
            || self.evolution.steps == 0
            || self.evolution.record_every == 0
        {
            return bad(
                "evolution.dt, evolution.steps and evolution.record_every must be positive",
            );
        }
        if self.commutator.powers.is_empty()
            || self.commutator.powers.iter().any(|n| !(1..=6).contains(n))
        {
            return bad("commutator.powers must be a non-empty list within 1..=6");
        }
        if self.commutator.grid_n < 32 {
            return bad("commutator.grid_n must be at least 32");
        }
        if ![2, 4, 8].contains(&self.commutator.stencil_order) {
            return bad("commutator.stencil_order must be 2, 4 or 8");
        }
        if self.recovery.samples < 5 || !positive(self.recovery.dt) {
            return bad("recovery.samples must be at least 5 and recovery.dt positive");
        }
        if self.betas.iter().any(|b| !positive(*b)) {
            return bad("betas must be positive");
        }
        self.tolerances.validate()
    }
}
