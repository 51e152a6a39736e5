use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gridcore::{observed_order, GridMeta};

const REQUIREMENTS: &str = "requirements";

/// Outcome of one named numerical check.
///
/// `pass` holds exactly when `residual_linf <= tolerance` (a NaN residual
/// never passes) and every requirement recorded with [`ResidualReport::require`]
/// holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check_name: String,
    pub grid: GridMeta,
    pub params: BTreeMap<String, Value>,
    pub residual_linf: f64,
    pub residual_l2: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(
        check_name: impl Into<String>,
        grid: GridMeta,
        residual_linf: f64,
        residual_l2: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            grid,
            params: BTreeMap::new(),
            residual_linf,
            residual_l2,
            tolerance,
            pass: residual_linf <= tolerance,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    /// Re-judges the report against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.judge();
        self
    }

    /// Records an additional named pass condition under `params.requirements`.
    pub fn require(mut self, name: &str, holds: bool) -> Self {
        let entry = self
            .params
            .entry(REQUIREMENTS.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if let Value::Object(map) = entry {
            map.insert(name.to_string(), Value::Bool(holds));
        }
        self.pass = self.judge();
        self
    }

    fn judge(&self) -> bool {
        let requirements_hold = match self.params.get(REQUIREMENTS) {
            Some(Value::Object(map)) => map.values().all(|v| v.as_bool() == Some(true)),
            _ => true,
        };
        self.residual_linf <= self.tolerance && requirements_hold
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.check_name = name.into();
        self
    }
}

/// Errors measured over a refinement ladder and the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: Option<f64>,
}

impl ConvergenceStudy {
    pub fn new(steps: Vec<f64>, errors: Vec<f64>) -> Self {
        let order = observed_order(&steps, &errors);
        Self {
            steps,
            errors,
            order,
        }
    }
}
