//! Flat `key = value` run configuration.
//!
//! Keys are dotted paths into [`ExperimentConfig`]. Blank lines and lines
//! starting with `#` are ignored; unknown or repeated keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Momentum,
    Tstar,
    LinearCompare,
    Pairdiff,
    Twotime,
    Convergence,
    CommutatorSuite,
    EtermTable,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Momentum,
        Scenario::Tstar,
        Scenario::LinearCompare,
        Scenario::Pairdiff,
        Scenario::Twotime,
        Scenario::Convergence,
        Scenario::CommutatorSuite,
        Scenario::EtermTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Momentum => "momentum",
            Scenario::Tstar => "tstar",
            Scenario::LinearCompare => "linear_compare",
            Scenario::Pairdiff => "pairdiff",
            Scenario::Twotime => "twotime",
            Scenario::Convergence => "convergence",
            Scenario::CommutatorSuite => "commutator_suite",
            Scenario::EtermTable => "eterm_table",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// `A d/dx exp(-((x-a)/sigma)^2)`
    GaussianDerivative,
    /// `A d^2/dx^2 exp(-((x-a)/sigma)^2)`, zero first momentum.
    GaussianSecondDerivative,
    /// `A` times samples read from `data.samples`.
    CustomSamples,
}

impl FromStr for DataKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian_derivative" => Ok(DataKind::GaussianDerivative),
            "gaussian_second_derivative" => Ok(DataKind::GaussianSecondDerivative),
            "custom_samples" => Ok(DataKind::CustomSamples),
            _ => Err(format!("unknown data kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub kind: DataKind,
    pub amplitude: f64,
    pub width: f64,
    pub shift: f64,
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConfig {
    pub dt: f64,
    /// `None` lets the scenario pick its reference window.
    pub t_end: Option<f64>,
    pub snapshots: usize,
    pub record_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: GridConfig,
    pub data: DataConfig,
    pub time: TimeConfig,
    pub nonlinearity: u32,
    pub output_dir: PathBuf,
}

/// Largest supported nonlinearity power `k`.
pub const MAX_K: u32 = 4;

/// Every accepted key, in file order of [`ExperimentConfig::to_text`].
pub const KEYS: [&str; 14] = [
    "scenario",
    "grid.n",
    "grid.length",
    "data.kind",
    "data.amplitude",
    "data.width",
    "data.shift",
    "data.samples",
    "time.dt",
    "time.t_end",
    "time.snapshots",
    "time.record_stride",
    "nonlinearity",
    "output_dir",
];

impl ExperimentConfig {
    /// Reference run: canonical data on the large cell. `pairdiff` shifts its
    /// second datum by `-40`, `twotime` starts from zero-momentum data, and the
    /// commutator suite works on a smaller cell.
    pub fn reference(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            grid: GridConfig { n: 65536, length: 6400.0 },
            data: DataConfig {
                kind: DataKind::GaussianDerivative,
                amplitude: 1.0,
                width: 1.0,
                shift: 0.0,
                samples: None,
            },
            time: TimeConfig { dt: 2e-3, t_end: None, snapshots: 12, record_stride: 10 },
            nonlinearity: 0,
            output_dir: PathBuf::from("runs").join(scenario.name()),
        };
        match scenario {
            Scenario::Pairdiff => cfg.data.shift = -40.0,
            Scenario::Twotime => cfg.data.kind = DataKind::GaussianSecondDerivative,
            Scenario::CommutatorSuite => cfg.grid = GridConfig { n: 16384, length: 800.0 },
            _ => {}
        }
        cfg
    }

    /// Parses `text` on top of [`ExperimentConfig::reference`]. A relative
    /// `data.samples` path is resolved against `base_dir`.
    pub fn parse(scenario: Scenario, text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::reference(scenario);
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| RunError::config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| at(format!("unknown key `{key}`")))?;
            if seen.contains(known) {
                return Err(at(format!("key `{key}` given twice")));
            }
            seen.push(known);
            cfg.set(key, value, base_dir).map_err(at)?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(scenario: Scenario, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(scenario, &text, base)
    }

    fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> std::result::Result<(), String> {
        match key {
            "scenario" => {
                let s: Scenario = value.parse()?;
                if s != self.scenario {
                    return Err(format!("config is for `{s}` but `{}` was requested", self.scenario));
                }
            }
            "grid.n" => self.grid.n = number(key, value)?,
            "grid.length" => self.grid.length = number(key, value)?,
            "data.kind" => self.data.kind = value.parse()?,
            "data.amplitude" => self.data.amplitude = number(key, value)?,
            "data.width" => self.data.width = number(key, value)?,
            "data.shift" => self.data.shift = number(key, value)?,
            "data.samples" => self.data.samples = Some(base_dir.join(value)),
            "time.dt" => self.time.dt = number(key, value)?,
            "time.t_end" => {
                self.time.t_end = if value == "auto" { None } else { Some(number(key, value)?) };
            }
            "time.snapshots" => self.time.snapshots = number(key, value)?,
            "time.record_stride" => self.time.record_stride = number(key, value)?,
            "nonlinearity" => self.nonlinearity = number(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    /// Range checks that need no field data.
    pub fn check(&self) -> Result<()> {
        let fail = |msg: &str| Err(RunError::config(msg));
        if self.grid.n < 64 || self.grid.n % 2 != 0 {
            return fail("grid.n must be even and at least 64");
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return fail("grid.length must be positive");
        }
        if !self.data.amplitude.is_finite() || self.data.amplitude == 0.0 {
            return fail("data.amplitude must be finite and nonzero");
        }
        if !(self.data.width > 0.0 && self.data.width.is_finite()) {
            return fail("data.width must be positive");
        }
        if !self.data.shift.is_finite() {
            return fail("data.shift must be finite");
        }
        if (self.data.kind == DataKind::CustomSamples) != self.data.samples.is_some() {
            return fail("data.samples is required by, and only allowed with, data.kind = custom_samples");
        }
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return fail("time.dt must be positive");
        }
        if let Some(t) = self.time.t_end {
            if !t.is_finite() || t == 0.0 {
                return fail("time.t_end must be finite and nonzero");
            }
            if t.abs() < self.time.dt {
                return fail("time.t_end is shorter than one step");
            }
        }
        if self.time.snapshots < 3 {
            return fail("time.snapshots must be at least 3");
        }
        if self.time.record_stride == 0 {
            return fail("time.record_stride must be positive");
        }
        if self.nonlinearity > MAX_K {
            return fail("nonlinearity must be at most 4");
        }
        Ok(())
    }

    /// Canonical `key = value` text; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("scenario", self.scenario.to_string());
        put("grid.n", self.grid.n.to_string());
        put("grid.length", self.grid.length.to_string());
        let kind = match self.data.kind {
            DataKind::GaussianDerivative => "gaussian_derivative",
            DataKind::GaussianSecondDerivative => "gaussian_second_derivative",
            DataKind::CustomSamples => "custom_samples",
        };
        put("data.kind", kind.to_string());
        put("data.amplitude", self.data.amplitude.to_string());
        put("data.width", self.data.width.to_string());
        put("data.shift", self.data.shift.to_string());
        if let Some(p) = &self.data.samples {
            put("data.samples", p.display().to_string());
        }
        put("time.dt", self.time.dt.to_string());
        put("time.t_end", self.time.t_end.map_or_else(|| "auto".to_string(), |t| t.to_string()));
        put("time.snapshots", self.time.snapshots.to_string());
        put("time.record_stride", self.time.record_stride.to_string());
        put("nonlinearity", self.nonlinearity.to_string());
        put("output_dir", self.output_dir.display().to_string());
        out
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}
