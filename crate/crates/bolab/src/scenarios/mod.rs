//! Scenario runners. Each one validates its hypotheses on the initial data,
//! evolves, and returns tables plus gates; [`execute`] wraps the result in a
//! manifest.

mod checks;
mod jumps;
mod momentum;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use bolab_core::data::{
    gaussian_derivative, gaussian_derivative_scalars, gaussian_second_derivative, gaussian_second_derivative_scalars,
};
use bolab_core::decay::{jump_noise_floor, MEAN_TOLERANCE};
use bolab_core::integrator::{invariants, BoParams, InvariantRecord, Trajectory};
use bolab_core::spectral::{Transform, CONTAMINATION_LIMIT};
use bolab_core::weighted::boundary_contamination;
use bolab_core::{Field, Grid};

use crate::config::{DataKind, ExperimentConfig, Scenario};
use crate::error::{Result, RunError};
use crate::manifest::{Derived, Gate, Metadata, RunManifest};
use crate::output::Table;

/// `t*` of the canonical data; the time scale for runs whose data has no `t*`.
pub const REFERENCE_SCALE: f64 = 5.656854249492381;

/// `|mu1| <= MOMENTUM_TOLERANCE * int |x u0|` counts as zero first momentum.
pub const MOMENTUM_TOLERANCE: f64 = 1e-10;

/// Initial data, its transform and its scalars.
pub(crate) struct Prepared {
    pub grid: Grid,
    pub tr: Transform,
    pub u0: Field,
    pub r0: InvariantRecord,
    pub derived: Derived,
    /// `int |x u0|`, the scale for the zero-momentum test.
    pub abs_moment: f64,
}

impl Prepared {
    pub fn mu1(&self) -> f64 {
        self.derived.mu1
    }

    pub fn l2sq(&self) -> f64 {
        self.derived.l2sq
    }

    pub fn has_zero_momentum(&self) -> bool {
        self.mu1().abs() <= MOMENTUM_TOLERANCE * self.abs_moment
    }

    /// Root of `mu1 t + (t^2 / 2p) int u0^p`: `t*` exactly for `k = 0`,
    /// the constant-power estimate otherwise. `None` for zero momentum.
    pub fn root_guess(&self, k: u32) -> Option<f64> {
        if self.has_zero_momentum() {
            return None;
        }
        let p = (2 * k + 2) as f64;
        let power = if k == 0 { self.l2sq() } else { self.r0.power_integral };
        (power > 0.0).then(|| -2.0 * p * self.mu1() / power)
    }

    /// Reference time of a scenario window.
    pub fn time_scale(&self, k: u32) -> f64 {
        self.root_guess(k).unwrap_or(REFERENCE_SCALE)
    }
}

/// Builds `u0` for `cfg` with the given shift; custom samples ignore it.
pub(crate) fn build_data(cfg: &ExperimentConfig, grid: Grid, shift: f64) -> Result<Field> {
    let d = &cfg.data;
    let u = match d.kind {
        DataKind::GaussianDerivative => gaussian_derivative(grid, d.amplitude, d.width, shift)?,
        DataKind::GaussianSecondDerivative => gaussian_second_derivative(grid, d.amplitude, d.width, shift)?,
        DataKind::CustomSamples => {
            let path = d.samples.as_deref().ok_or_else(|| RunError::config("data.samples missing"))?;
            let values = read_samples(path)?;
            if values.len() != grid.n() {
                return Err(RunError::config(format!(
                    "{} holds {} samples but grid.n = {}",
                    path.display(),
                    values.len(),
                    grid.n()
                )));
            }
            let u = Field::new(grid, values.into_iter().map(|v| d.amplitude * v).collect())
                .map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
            let ratio = boundary_contamination(&u);
            if ratio > CONTAMINATION_LIMIT {
                return Err(bolab_core::Error::BoundaryContamination { ratio, limit: CONTAMINATION_LIMIT }.into());
            }
            u
        }
    };
    Ok(u)
}

/// Whitespace- or comma-separated numbers; `#` starts a comment.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 =
                tok.parse().map_err(|_| RunError::config(format!("{}: bad sample `{tok}`", path.display())))?;
            out.push(v);
        }
    }
    Ok(out)
}

pub(crate) fn grid_of(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::new(cfg.grid.n, cfg.grid.length).map_err(|e| RunError::config(format!("grid: {e}")))
}

pub(crate) fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let grid = grid_of(cfg)?;
    let tr = Transform::new(grid).map_err(|e| RunError::config(format!("grid: {e}")))?;
    let u0 = build_data(cfg, grid, cfg.data.shift)?;
    let mut ws = tr.workspace();
    let r0 = invariants(&tr, &mut ws, 0.0, &u0, cfg.nonlinearity)?;
    let abs_moment = u0.values().iter().enumerate().map(|(j, v)| (grid.x(j) * v).abs()).sum::<f64>() * grid.dx();
    let closed = match cfg.data.kind {
        DataKind::GaussianDerivative => Some(gaussian_derivative_scalars(cfg.data.amplitude, cfg.data.width)),
        DataKind::GaussianSecondDerivative => {
            Some(gaussian_second_derivative_scalars(cfg.data.amplitude, cfg.data.width))
        }
        DataKind::CustomSamples => None,
    };
    let l2sq = r0.l2 * r0.l2;
    let mut p = Prepared {
        grid,
        tr,
        u0,
        r0,
        derived: Derived {
            mu1: r0.momentum,
            l2sq,
            tstar: None,
            kappa: None,
            mu1_closed_form: closed.map(|c| c.mu1),
            l2sq_closed_form: closed.map(|c| c.l2sq),
        },
        abs_moment,
    };
    if cfg.nonlinearity == 0 {
        p.derived.tstar = p.root_guess(0);
    }
    Ok(p)
}

/// Rejects vanishing data and data with a nonzero mean mode, as the jump
/// diagnostics require.
pub(crate) fn require_zero_mean(p: &Prepared) -> Result<()> {
    if p.l2sq() == 0.0 {
        return Err(RunError::config("initial data vanishes"));
    }
    let mut ws = p.tr.workspace();
    let spec = p.tr.forward(&p.u0, &mut ws)?;
    let scale = spec.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mean = spec.coeffs()[0].norm();
    if mean > MEAN_TOLERANCE * scale {
        return Err(RunError::config(format!("initial data must have zero mean (|u_hat(0)| = {mean:e})")));
    }
    Ok(())
}

pub(crate) fn base_params(cfg: &ExperimentConfig, t_end: f64, snapshots: Vec<f64>) -> BoParams {
    let mut p = BoParams::new(cfg.nonlinearity, cfg.time.dt, t_end);
    p.record_stride = cfg.time.record_stride;
    p.snapshot_times = snapshots;
    p
}

/// `m` times spread over `[T/15, T]`, i.e. `[0.1, 1.5] t_ref` for `T = 1.5 t_ref`.
pub(crate) fn sample_times(t_end: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| t_end * (1.0 + 14.0 * i as f64 / (m - 1) as f64) / 15.0).collect()
}

pub(crate) fn invariants_table(records: &[InvariantRecord]) -> Table {
    let mut t = Table::new(
        "invariants",
        &["t", "i1", "l2", "momentum", "hamiltonian", "boundary_ratio", "second_moment", "power_integral"],
    );
    for r in records {
        t.push(vec![r.t, r.i1, r.l2, r.momentum, r.hamiltonian, r.boundary_ratio, r.second_moment, r.power_integral]);
    }
    t
}

/// Rounding floor of the jump stencil for a field.
pub(crate) fn noise_floor(tr: &Transform, u: &Field) -> Result<f64> {
    let mut ws = tr.workspace();
    Ok(jump_noise_floor(&tr.forward(u, &mut ws)?))
}

pub(crate) fn metadata(cfg: &ExperimentConfig, grid: &Grid, traj: Option<&Trajectory>) -> Metadata {
    Metadata {
        n: grid.n(),
        length: grid.length(),
        dx: grid.dx(),
        dxi: grid.dxi(),
        dt: cfg.time.dt,
        t_end: traj.map_or(0.0, |t| t.params.t_end),
        steps: traj.map_or(0, |t| t.steps),
        record_stride: cfg.time.record_stride,
        dealias_fraction: traj.map_or_else(
            || bolab_core::integrator::default_dealias_fraction(cfg.nonlinearity),
            |t| t.params.dealias_fraction,
        ),
        k: cfg.nonlinearity,
        snapshot_times: traj.map_or_else(Vec::new, |t| t.snapshots.iter().map(|s| s.0).collect()),
    }
}

/// What a scenario hands back before the manifest is assembled.
pub(crate) struct Outcome {
    pub metadata: Metadata,
    pub derived: Derived,
    pub tables: Vec<Table>,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub gates: Vec<Gate>,
}

impl Outcome {
    pub fn new(metadata: Metadata, derived: Derived) -> Self {
        Self { metadata, derived, tables: Vec::new(), scalars: BTreeMap::new(), notes: Vec::new(), gates: Vec::new() }
    }

    pub fn scalar(&mut self, name: &str, v: f64) {
        self.scalars.insert(name.into(), v);
    }

    pub fn gate(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

/// Runs a scenario and returns its manifest and tables; nothing is written.
pub fn execute(cfg: &ExperimentConfig, seed: u64) -> Result<(RunManifest, Vec<Table>)> {
    cfg.check()?;
    let start = Instant::now();
    let out = match cfg.scenario {
        Scenario::Momentum => momentum::run(cfg)?,
        Scenario::Tstar => jumps::run_tstar(cfg)?,
        Scenario::LinearCompare => jumps::run_linear_compare(cfg)?,
        Scenario::Pairdiff => jumps::run_pairdiff(cfg)?,
        Scenario::Twotime => jumps::run_twotime(cfg)?,
        Scenario::Convergence => checks::run_convergence(cfg)?,
        Scenario::CommutatorSuite => checks::run_commutator_suite(cfg, seed)?,
        Scenario::EtermTable => checks::run_eterm_table(cfg)?,
    };
    let passed = out.gates.iter().all(|g| g.passed);
    let manifest = RunManifest {
        scenario: cfg.scenario.name().into(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config: cfg.clone(),
        config_text: cfg.to_text(),
        metadata: out.metadata,
        derived: out.derived,
        scalars: out.scalars,
        notes: out.notes,
        gates: out.gates,
        passed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((manifest, out.tables))
}

/// Largest relative spread `(max - min) / |mean|`.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean.abs()
}

pub(crate) fn sign_changes(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}
