//! Integrating-factor RK4 for `u_t + H u_xx + u^(2k+1) u_x = 0`, invariant
//! records and the momentum laws.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::math::powi;
use crate::error::{Error, Result};
use crate::fft::{RealFft, RealFftScratch};
use crate::grid::{Field, Grid, Spectrum};
use crate::spectral::{dealias_cutoff, Transform, Workspace, CONTAMINATION_LIMIT};
use crate::weighted::boundary_contamination;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative tolerance for treating two times as equal.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoParams {
    /// Nonlinearity power: the flux is `u^(2k+2) / (2k+2)`.
    pub k: u32,
    /// Step size magnitude; the direction follows the sign of `t_end`.
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub dealias_fraction: f64,
    /// `false` evolves the free group only.
    pub nonlinear: bool,
    /// Invariants are recorded every `record_stride` steps and at every snapshot.
    pub record_stride: usize,
    pub contamination_limit: f64,
    /// Reject data whose mean mode exceeds `1e-10 * max |u_hat|`.
    pub require_zero_mean: bool,
}

impl BoParams {
    pub fn new(k: u32, dt: f64, t_end: f64) -> Self {
        Self {
            k,
            dt,
            t_end,
            snapshot_times: Vec::new(),
            dealias_fraction: default_dealias_fraction(k),
            nonlinear: true,
            record_stride: 1,
            contamination_limit: CONTAMINATION_LIMIT,
            require_zero_mean: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument("dt must be positive"));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidArgument("t_end must be finite"));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidArgument("dealias fraction must lie in (0, 1]"));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record stride must be positive"));
        }
        let (lo, hi) = (self.t_end.min(0.0), self.t_end.max(0.0));
        let slack = TIME_EPS * hi.abs().max(lo.abs()).max(1.0);
        for &t in &self.snapshot_times {
            if !(t.is_finite() && t >= lo - slack && t <= hi + slack) {
                return Err(Error::SnapshotOutOfRange { t });
            }
        }
        Ok(())
    }
}

/// Keep fraction `2/(p+2)` for the degree `p = 2k+2` product.
pub fn default_dealias_fraction(k: u32) -> f64 {
    2.0 / (2 * k + 3) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub t: f64,
    /// `int u dx`
    pub i1: f64,
    /// `||u||_2`
    pub l2: f64,
    /// `int x u dx` over the whole cell.
    pub momentum: f64,
    /// `int (u H u_x / 2 + u^(p+1) / (p (p+1))) dx` with `p = 2k+2`.
    pub hamiltonian: f64,
    pub boundary_ratio: f64,
    /// `int x^2 u dx` over the whole cell.
    pub second_moment: f64,
    /// `int u^(2k+2) dx`
    pub power_integral: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: BoParams,
    /// Strictly increasing in time.
    pub snapshots: Vec<(f64, Field)>,
    /// Sorted by time.
    pub records: Vec<InvariantRecord>,
    pub steps: usize,
}

impl Trajectory {
    /// Snapshot whose time is within `1e-9` of `t`.
    pub fn snapshot(&self, t: f64) -> Option<&Field> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|(_, f)| f)
    }

    pub fn final_field(&self) -> &Field {
        let last = if self.params.t_end >= 0.0 { self.snapshots.last() } else { self.snapshots.first() };
        &last.expect("trajectory always holds the initial snapshot").1
    }
}

/// Grid moments shared by [`invariants`] and the solver.
fn record_from_values(grid: &Grid, t: f64, u: &[f64], dispersion_sum: f64, k: u32) -> InvariantRecord {
    let dx = grid.dx();
    let p = 2 * k as i32 + 2;
    let (mut i1, mut l2, mut mom, mut m2, mut pw, mut pw1) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, &v) in u.iter().enumerate() {
        let x = grid.x(j);
        let vp = powi(v, p);
        i1 += v;
        l2 += v * v;
        pw += vp;
        pw1 += vp * v;
        mom += x * v;
        m2 += x * x * v;
    }
    let pf = p as f64;
    let potential = pw1 * dx / (pf * (pf + 1.0));
    let field = Field::new(*grid, u.to_vec());
    let boundary_ratio = field.as_ref().map(boundary_contamination).unwrap_or(f64::INFINITY);
    InvariantRecord {
        t,
        i1: i1 * dx,
        l2: libm::sqrt(l2 * dx),
        momentum: mom * dx,
        hamiltonian: 0.25 / PI * grid.dxi() * dispersion_sum + potential,
        boundary_ratio,
        second_moment: m2 * dx,
        power_integral: pw * dx,
    }
}

/// Invariants of a field at time `t`.
pub fn invariants(tr: &Transform, ws: &mut Workspace, t: f64, u: &Field, k: u32) -> Result<InvariantRecord> {
    let spec = tr.forward(u, ws)?;
    let g = *spec.grid();
    let sum: f64 = spec.coeffs().iter().enumerate().map(|(i, c)| g.xi(i).abs() * c.norm_sqr()).sum();
    Ok(record_from_values(&g, t, u.values(), sum, k))
}

/// `mu(t) = mu1 + (t/2) ||u0||^2`.
pub fn momentum_law(t: f64, mu1: f64, l2sq: f64) -> f64 {
    mu1 + 0.5 * t * l2sq
}

/// `t* = -4 mu1 / ||u0||^2`; `None` when `mu1 == 0`.
pub fn tstar_quadratic(mu1: f64, l2sq: f64) -> Result<Option<f64>> {
    if !(l2sq > 0.0) {
        return Err(Error::InvalidArgument("squared L2 norm must be positive"));
    }
    if mu1 == 0.0 {
        return Ok(None);
    }
    Ok(Some(-4.0 * mu1 / l2sq))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TstarOutcome {
    Found(f64),
    /// No sign change of the outer integral on `[0, span]`.
    NotBracketed { span: f64 },
}

/// Root of `int_0^t (mu1 + (1/(2k+2)) int_0^s ||u||_{2k+2}^{2k+2}) ds` from the
/// records, by cumulative trapezoid quadrature and bisection.
pub fn tstar_general(traj: &Trajectory, k: u32) -> Result<TstarOutcome> {
    let recs: Vec<&InvariantRecord> = traj.records.iter().filter(|r| r.t >= 0.0).collect();
    if recs.len() < 2 || recs[0].t != 0.0 {
        return Err(Error::InvalidArgument("records must start at t = 0 and hold at least two entries"));
    }
    let available = recs[recs.len() - 1].t;
    let p = (2 * k + 2) as f64;
    let mu1 = recs[0].momentum;
    let mut g_prev = mu1;
    let mut f_prev = 0.0;
    let mut first_sign = 0.0;
    for w in recs.windows(2) {
        let h = w[1].t - w[0].t;
        let g_next = g_prev + 0.5 * h * (w[0].power_integral + w[1].power_integral) / p;
        let f_next = f_prev + 0.5 * h * (g_prev + g_next);
        if first_sign == 0.0 {
            first_sign = sign(f_next);
        } else if sign(f_next) != first_sign {
            // G is linear on the interval, so F is quadratic in tau.
            let f = |tau: f64| f_prev + g_prev * tau + 0.5 * (g_next - g_prev) / h * tau * tau;
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sign(f(mid)) == first_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * w[1].t {
                    break;
                }
            }
            return Ok(TstarOutcome::Found(w[0].t + 0.5 * (lo + hi)));
        }
        g_prev = g_next;
        f_prev = f_next;
    }
    Ok(TstarOutcome::NotBracketed { span: available })
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Stepper state: plans, symbols and buffers for one evolution.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: Grid,
    rfft: RealFft,
    scratch: RealFftScratch,
    power: i32,
    nonlinear: bool,
    cut: usize,
    /// `xi` on the half spectrum with the Nyquist entry zeroed.
    xi: Vec<f64>,
    omega: Vec<f64>,
    real: Vec<f64>,
    tmp: Vec<Complex64>,
    stage: [Vec<Complex64>; 4],
    half_phase: Vec<Complex64>,
    cached_h: f64,
}

impl Solver {
    pub fn new(grid: Grid, k: u32, dealias_fraction: f64, nonlinear: bool) -> Result<Self> {
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidArgument("dealias fraction must lie in (0, 1]"));
        }
        let n = grid.n();
        let h = n / 2 + 1;
        let rfft = RealFft::new(n)?;
        let scratch = rfft.make_scratch();
        let xi: Vec<f64> = (0..h).map(|i| if i == n / 2 { 0.0 } else { grid.xi(i) }).collect();
        let omega = xi.iter().map(|x| x * x.abs()).collect();
        Ok(Self {
            grid,
            rfft,
            scratch,
            power: 2 * k as i32 + 2,
            nonlinear,
            cut: dealias_cutoff(n, dealias_fraction),
            xi,
            omega,
            real: vec![0.0; n],
            tmp: vec![ZERO; h],
            stage: core::array::from_fn(|_| vec![ZERO; h]),
            half_phase: vec![ZERO; h],
            cached_h: f64::NAN,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Half spectrum of raw DFT coefficients.
    fn to_half(&self, spec: &Spectrum) -> Vec<Complex64> {
        let inv_dx = 1.0 / self.grid.dx();
        let n = self.grid.n();
        let c = spec.coeffs();
        (0..=n / 2)
            .map(|k| {
                let s = if k % 2 == 0 { inv_dx } else { -inv_dx };
                let v = if k == 0 || k == n / 2 { Complex64::new(c[k].re, 0.0) } else { (c[k] + c[n - k].conj()) * 0.5 };
                v * s
            })
            .collect()
    }

    fn to_spectrum(&self, half: &[Complex64]) -> Spectrum {
        let dx = self.grid.dx();
        let n = self.grid.n();
        let mut coeffs = vec![ZERO; n];
        for (k, &v) in half.iter().enumerate() {
            let c = v * if k % 2 == 0 { dx } else { -dx };
            coeffs[k] = c;
            if k > 0 && k < n / 2 {
                coeffs[n - k] = c.conj();
            }
        }
        Spectrum::from_parts(self.grid, coeffs)
    }

    fn to_field(&mut self, half: &[Complex64]) -> Result<Field> {
        self.rfft.inverse(half, &mut self.real, &mut self.scratch);
        Field::new(self.grid, self.real.clone())
    }

    fn from_field(&mut self, u: &Field) -> Vec<Complex64> {
        let mut half = vec![ZERO; self.grid.n() / 2 + 1];
        self.rfft.forward(u.values(), &mut half, &mut self.scratch);
        half
    }

    /// `out = -(i xi / p) P[(P v)^p]` with `P` the dealiasing projection.
    fn nonlinear_into(&mut self, v: &[Complex64], out_idx: usize) -> bool {
        let cut = self.cut;
        let out = &mut self.stage[out_idx];
        if !self.nonlinear {
            out.iter_mut().for_each(|z| *z = ZERO);
            return true;
        }
        for (i, (t, &z)) in self.tmp.iter_mut().zip(v).enumerate() {
            *t = if i <= cut { z } else { ZERO };
        }
        self.rfft.inverse(&self.tmp, &mut self.real, &mut self.scratch);
        let p = self.power;
        let mut finite = true;
        for r in self.real.iter_mut() {
            *r = powi(*r, p);
            finite &= r.is_finite();
        }
        if !finite {
            return false;
        }
        self.rfft.forward(&self.real, &mut self.tmp, &mut self.scratch);
        let inv_p = 1.0 / p as f64;
        for (i, (o, &w)) in out.iter_mut().zip(self.tmp.iter()).enumerate() {
            *o = if i <= cut { Complex64::new(w.im, -w.re) * (self.xi[i] * inv_p) } else { ZERO };
        }
        true
    }

    fn prepare_phase(&mut self, h: f64) {
        if h != self.cached_h {
            for (e, &w) in self.half_phase.iter_mut().zip(&self.omega) {
                let (s, c) = libm::sincos(0.5 * h * w);
                *e = Complex64::new(c, -s);
            }
            self.cached_h = h;
        }
    }

    /// One Lawson RK4 step of size `h` on a raw half spectrum. Returns false on overflow or NaN.
    fn step_half(&mut self, v: &mut [Complex64], h: f64) -> bool {
        self.prepare_phase(h);
        let m = v.len();
        let mut arg = vec![ZERO; m];
        if !self.nonlinear_into(v, 0) {
            return false;
        }
        for i in 0..m {
            arg[i] = self.half_phase[i] * (v[i] + self.stage[0][i] * (0.5 * h));
        }
        if !self.nonlinear_into(&arg, 1) {
            return false;
        }
        for i in 0..m {
            arg[i] = self.half_phase[i] * v[i] + self.stage[1][i] * (0.5 * h);
        }
        if !self.nonlinear_into(&arg, 2) {
            return false;
        }
        for i in 0..m {
            let e = self.half_phase[i];
            arg[i] = e * e * v[i] + e * self.stage[2][i] * h;
        }
        if !self.nonlinear_into(&arg, 3) {
            return false;
        }
        let mut finite = true;
        for i in 0..m {
            let e = self.half_phase[i];
            let e2 = e * e;
            let [k1, k2, k3, k4] = &self.stage;
            v[i] = e2 * v[i] + (e2 * k1[i] + e * (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            finite &= v[i].re.is_finite() && v[i].im.is_finite();
        }
        finite
    }

    fn record(&mut self, t: f64, half: &[Complex64], k: u32) -> InvariantRecord {
        self.rfft.inverse(half, &mut self.real, &mut self.scratch);
        let n = self.grid.n();
        let dx = self.grid.dx();
        let mut sum = 0.0;
        for (i, z) in half.iter().enumerate() {
            let w = if i == 0 || i == n / 2 { 1.0 } else { 2.0 };
            sum += w * self.grid.xi(i).abs() * z.norm_sqr();
        }
        let real = core::mem::take(&mut self.real);
        let rec = record_from_values(&self.grid, t, &real, sum * dx * dx, k);
        self.real = real;
        rec
    }
}

/// One integrating-factor RK4 step from `(t, spec)`.
pub fn step_ifrk4(solver: &mut Solver, t: f64, spec: &Spectrum, dt: f64) -> Result<(f64, Spectrum)> {
    if spec.grid() != solver.grid() {
        return Err(Error::GridMismatch);
    }
    let mut v = solver.to_half(spec);
    if !solver.step_half(&mut v, dt) {
        return Err(Error::Instability { step: 0, t });
    }
    Ok((t + dt, solver.to_spectrum(&v)))
}

/// Snapshot targets in stepping order (increasing `|t|`), augmented with 0,
/// `t_end` and, for `k = 0` data with nonzero momentum inside the range, `t*`.
fn snapshot_plan(params: &BoParams, tstar: Option<f64>) -> Vec<f64> {
    let mut ts = params.snapshot_times.clone();
    ts.push(0.0);
    ts.push(params.t_end);
    let (lo, hi) = (params.t_end.min(0.0), params.t_end.max(0.0));
    if let Some(s) = tstar {
        if s >= lo && s <= hi && s.abs() > 1e-9 * params.t_end.abs() {
            ts.push(s);
        }
    }
    let slack = TIME_EPS * hi.abs().max(lo.abs()).max(1.0);
    for t in ts.iter_mut() {
        *t = t.clamp(lo, hi);
    }
    ts.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    ts.dedup_by(|a, b| (*a - *b).abs() <= slack);
    ts
}

/// Evolves `u0` over `[0, t_end]` (or `[t_end, 0]`), landing exactly on
/// every snapshot time.
pub fn evolve(u0: &Field, params: &BoParams) -> Result<Trajectory> {
    params.validate()?;
    let grid = *u0.grid();
    let limit = params.contamination_limit;
    let ratio = boundary_contamination(u0);
    if ratio > limit {
        return Err(Error::BoundaryContamination { ratio, limit });
    }
    let mut solver = Solver::new(grid, params.k, params.dealias_fraction, params.nonlinear)?;
    let mut v = solver.from_field(u0);
    if params.require_zero_mean {
        let scale = v.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        if v[0].norm() > 1e-10 * scale {
            return Err(Error::NonZeroMean { value: v[0].norm() * grid.dx() });
        }
    }
    let first = solver.record(0.0, &v, params.k);
    let tstar = if params.k == 0 && first.l2 > 0.0 {
        tstar_quadratic(first.momentum, first.l2 * first.l2)?
    } else {
        None
    };
    let plan = snapshot_plan(params, tstar);
    let dir = if params.t_end < 0.0 { -1.0 } else { 1.0 };
    let mut snapshots = Vec::with_capacity(plan.len());
    let mut records = vec![first];
    let mut t = 0.0;
    let mut steps = 0usize;
    for &target in &plan {
        loop {
            let remaining = (target - t) * dir;
            if remaining <= TIME_EPS * target.abs().max(1.0) {
                break;
            }
            let land = remaining <= params.dt * (1.0 + 1e-9);
            let h = if land { target - t } else { dir * params.dt };
            if !solver.step_half(&mut v, h) {
                return Err(Error::Instability { step: steps + 1, t: t + h });
            }
            steps += 1;
            t = if land { target } else { t + h };
            if !land && steps % params.record_stride == 0 {
                let rec = solver.record(t, &v, params.k);
                check_record(&rec, limit)?;
                records.push(rec);
            }
        }
        t = target;
        if records.last().map_or(true, |r| r.t != t) {
            let rec = solver.record(t, &v, params.k);
            check_record(&rec, limit)?;
            records.push(rec);
        }
        snapshots.push((t, solver.to_field(&v)?));
    }
    if dir < 0.0 {
        snapshots.reverse();
        records.reverse();
    }
    Ok(Trajectory { params: params.clone(), snapshots, records, steps })
}

fn check_record(rec: &InvariantRecord, limit: f64) -> Result<()> {
    if rec.boundary_ratio > limit {
        return Err(Error::BoundaryContamination { ratio: rec.boundary_ratio, limit });
    }
    Ok(())
}

/// `-u^(2k+1) u_x` in conservative, dealiased form.
pub fn nonlinear_term(tr: &Transform, ws: &mut Workspace, u: &Field, k: u32, dealias_fraction: f64) -> Result<Field> {
    let mut solver = Solver::new(*tr.grid(), k, dealias_fraction, true)?;
    let v = solver.from_field(u);
    if !solver.nonlinear_into(&v, 0) {
        return Err(Error::Instability { step: 0, t: 0.0 });
    }
    let out = solver.stage[0].clone();
    let spec = solver.to_spectrum(&out);
    tr.inverse(&spec, ws)
}
