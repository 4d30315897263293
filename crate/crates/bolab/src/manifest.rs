use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ExperimentConfig;

/// One pass/fail check with the value it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    /// `"<"`, `">"` or `"in"`.
    pub relation: &'static str,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Gate {
    /// Passes when `measured < limit`; NaN fails.
    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: "<", lower: None, upper: Some(limit), passed: measured < limit }
    }

    /// Passes when `measured > limit`; NaN fails.
    pub fn above(name: &str, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: ">", lower: Some(limit), upper: None, passed: measured > limit }
    }

    /// Passes when `lo <= measured <= hi`.
    pub fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            relation: "in",
            lower: Some(lo),
            upper: Some(hi),
            passed: (lo..=hi).contains(&measured),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub n: usize,
    pub length: f64,
    pub dx: f64,
    pub dxi: f64,
    pub dt: f64,
    /// Integration window actually used.
    pub t_end: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub dealias_fraction: f64,
    pub k: u32,
    pub snapshot_times: Vec<f64>,
}

/// Scalars of the initial data. Quadrature values are always present; the
/// closed forms only for the Gaussian kinds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub mu1: f64,
    pub l2sq: f64,
    pub tstar: Option<f64>,
    pub kappa: Option<f64>,
    pub mu1_closed_form: Option<f64>,
    pub l2sq_closed_form: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// The config as `key = value` text, ready to be fed back to the CLI.
    pub config_text: String,
    pub metadata: Metadata,
    pub derived: Derived,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub gates: Vec<Gate>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn failed_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| !g.passed)
    }
}
