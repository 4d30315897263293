//! Solver convergence, operator identities and the expansion-term table.

use std::f64::consts::PI;
use std::thread;

use bolab_core::decay::{e_term_table, e_terms, f_term, DELTA_TERM};
use bolab_core::integrator::{evolve, BoParams, Trajectory};
use bolab_core::spectral::{commutator, derivative, hilbert, Transform, Workspace};
use bolab_core::weighted::{windowed_coordinate, WeightSpec, XW_BOUND};
use bolab_core::{Complex64, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{base_params, build_data, grid_of, invariants_table, metadata, prepare, require_zero_mean, Outcome};
use crate::config::{DataKind, ExperimentConfig};
use crate::error::Result;
use crate::manifest::Gate;
use crate::output::Table;

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Final field only: one record at each end.
fn final_only(cfg: &ExperimentConfig, dt: f64, t_end: f64) -> BoParams {
    let mut p = base_params(cfg, t_end, Vec::new());
    p.dt = dt;
    p.record_stride = usize::MAX;
    p
}

pub(super) fn run_convergence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = prepare(cfg)?;
    let t_end = cfg.time.t_end.unwrap_or(1.0);
    let dt = cfg.time.dt;
    // Ten times the run step keeps the time error well above rounding.
    let h0 = 10.0 * dt;
    let steps = [h0, h0 / 2.0, h0 / 4.0, h0 / 16.0];
    let u0 = &p.u0;
    let finals: Vec<bolab_core::Result<Trajectory>> = thread::scope(|s| {
        let handles: Vec<_> =
            steps.iter().map(|&h| s.spawn(move || evolve(u0, &final_only(cfg, h, t_end)))).collect();
        handles.into_iter().map(|h| h.join().expect("convergence thread panicked")).collect()
    });
    let finals: Vec<Trajectory> = finals.into_iter().collect::<bolab_core::Result<_>>()?;
    let reference = finals[3].final_field();
    let errs: Vec<f64> = finals[..3].iter().map(|t| max_diff(t.final_field(), reference)).collect();

    let mut out = Outcome::new(metadata(cfg, &p.grid, Some(&finals[3])), p.derived.clone());
    let mut table = Table::new("convergence", &["dt", "error", "ratio"]);
    for i in 0..3 {
        let ratio = if i == 0 { f64::NAN } else { errs[i - 1] / errs[i] };
        table.push(vec![steps[i], errs[i], ratio]);
        if i > 0 {
            out.gate(Gate::within(&format!("dt_halving_ratio_{i}"), ratio, 12.0, 20.0));
        }
    }

    // Same cell, twice the points, same step.
    let fine = Grid::new(2 * p.grid.n(), p.grid.length())?;
    let u_fine = build_data(cfg, fine, cfg.data.shift);
    let run = base_params(cfg, t_end, Vec::new());
    let (coarse, refined, there) = thread::scope(|s| {
        let a = s.spawn(|| evolve(&p.u0, &final_only(cfg, dt, t_end)));
        let b = s.spawn(|| u_fine.and_then(|u| Ok(evolve(&u, &final_only(cfg, dt, t_end))?)));
        let c = evolve(&p.u0, &run);
        (a.join().expect("thread panicked"), b.join().expect("thread panicked"), c)
    });
    let (coarse, refined, there) = (coarse?, refined?, there?);
    let (uc, uf) = (coarse.final_field().values(), refined.final_field().values());
    let doubling = uc.iter().enumerate().fold(0.0f64, |m, (j, v)| m.max((v - uf[2 * j]).abs()));
    out.gate(Gate::below("grid_doubling_change", doubling, 1e-9));

    let back = evolve(there.final_field(), &final_only(cfg, dt, -t_end))?;
    let reversal = max_diff(back.final_field(), &p.u0);
    out.gate(Gate::below("time_reversal_error", reversal, 1e-7));

    out.tables.push(invariants_table(&there.records));
    out.tables.push(table);
    Ok(out)
}

/// `(l, m)` pairs of the commutator sweep.
const ORDERS: [(u32, u32); 6] = [(0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (0, 3)];
const RANDOM_PAIRS: usize = 100;

/// Up to three Gaussian bumps near the origin.
fn random_bumps(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    let count = rng.gen_range(1..=3);
    (0..count).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.7..2.0))).collect()
}

fn bumps(g: Grid, params: &[(f64, f64, f64)]) -> Result<Field> {
    Ok(Field::from_fn(g, |x| params.iter().map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())?)
}

fn apply(tr: &Transform, ws: &mut Workspace, f: &Field, op: impl Fn(&bolab_core::Spectrum) -> bolab_core::Result<bolab_core::Spectrum>) -> Result<Field> {
    let s = tr.forward(f, ws)?;
    Ok(tr.inverse(&op(&s)?, ws)?)
}

fn gaussian_derivative_of_order(tr: &Transform, ws: &mut Workspace, order: u32) -> Result<Field> {
    let base = Field::from_fn(*tr.grid(), |x| (-x * x).exp())?;
    apply(tr, ws, &base, |s| derivative(s, order))
}

/// `a H f - H(a f)`.
fn plain_commutator(tr: &Transform, ws: &mut Workspace, a: &Field, f: &Field) -> Result<Field> {
    let hf = apply(tr, ws, f, |s| Ok(hilbert(s)))?;
    let haf = apply(tr, ws, &a.mul(f)?, |s| Ok(hilbert(s)))?;
    Ok(a.mul(&hf)?.sub(&haf)?)
}

fn window_max(f: &Field, inner: f64) -> f64 {
    let g = f.grid();
    f.values().iter().enumerate().filter(|(j, _)| g.x(*j).abs() <= inner).fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Empirical `||d^l [H; a] d^m f|| / (||d^(l+m) a||_inf ||f||)` for each order pair.
fn sweep(g: Grid, pairs: &[(Vec<(f64, f64, f64)>, Vec<(f64, f64, f64)>)]) -> Result<Vec<[f64; 6]>> {
    let tr = Transform::new(g)?;
    let mut ws = tr.workspace();
    pairs
        .iter()
        .map(|(pa, pf)| {
            let a = bumps(g, pa)?;
            let f = bumps(g, pf)?;
            let mut row = [0.0; 6];
            for (slot, &(l, m)) in row.iter_mut().zip(&ORDERS) {
                let c = commutator(&tr, &mut ws, &a, &f, l, m)?;
                let da = apply(&tr, &mut ws, &a, |s| derivative(s, l + m))?.max_abs();
                *slot = c.l2_norm() / (da * f.l2_norm());
            }
            Ok(row)
        })
        .collect()
}

/// Largest violation of the `w_N` invariants over a sweep of caps.
fn weight_violation(caps: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &cap in caps {
        let w = WeightSpec::new(cap)?;
        let mut prev = w.value(0.0);
        for i in 1..=4000 {
            let x = 4.0 * cap * i as f64 / 4000.0;
            let (v, s) = (w.value(x), w.slope(x));
            worst = worst
                .max((s - 1.0).max(0.0))
                .max((-s).max(0.0))
                .max((x * s - XW_BOUND * v).max(0.0) / v)
                .max((prev - v).max(0.0) / v);
            if x >= 3.0 * cap {
                worst = worst.max((v - 2.0 * cap).abs() / (2.0 * cap));
            }
            prev = v;
        }
    }
    Ok(worst)
}

pub(super) fn run_commutator_suite(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let g = grid_of(cfg)?;
    let tr = Transform::new(g)?;
    let mut ws = tr.workspace();
    let mut out = Outcome::new(metadata(cfg, &g, None), prepare(cfg)?.derived);
    let (inner, outer) = (0.125 * g.length(), 0.225 * g.length());
    out.scalar("identity_window", inner);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // H^2 = -I on random zero-mean fields.
    let mut hh = 0.0f64;
    for _ in 0..RANDOM_PAIRS {
        let f = bumps(g, &random_bumps(&mut rng))?;
        let mean = f.integral() / g.length();
        let f0 = Field::new(g, f.values().iter().map(|v| v - mean).collect())?;
        let back = apply(&tr, &mut ws, &f0, |s| Ok(hilbert(&hilbert(s))))?;
        let num: f64 = back.values().iter().zip(f0.values()).map(|(a, b)| (a + b).powi(2)).sum();
        let den: f64 = f0.values().iter().map(|b| b * b).sum();
        hh = hh.max((num / den).sqrt());
    }
    out.gate(Gate::below("hilbert_squared", hh, 1e-12));

    // The coordinate commutes with H after enough derivatives on data with
    // vanishing low moments, and only then.
    let x1 = windowed_coordinate(g, 1, inner, outer)?;
    let x2 = windowed_coordinate(g, 2, inner, outer)?;
    let f2 = gaussian_derivative_of_order(&tr, &mut ws, 2)?;
    let c1 = window_max(&commutator(&tr, &mut ws, &x1, &f2, 0, 1)?, inner);
    let c2 = window_max(&commutator(&tr, &mut ws, &x2, &f2, 0, 2)?, inner);
    out.gate(Gate::below("coordinate_commutator_first", c1, 1e-6));
    out.gate(Gate::below("coordinate_commutator_second", c2, 1e-6));
    let f3 = gaussian_derivative_of_order(&tr, &mut ws, 3)?;
    let zero_branch = window_max(&plain_commutator(&tr, &mut ws, &x1, &f3)?, inner);
    out.gate(Gate::below("zero_mean_branch", zero_branch, 1e-6));
    let bump = Field::from_fn(g, |x| (-x * x).exp())?;
    let centre = plain_commutator(&tr, &mut ws, &x1, &bump)?.values()[g.n() / 2];
    let expected = bump.integral() / PI;
    out.scalar("nonzero_mean_branch_centre", centre);
    out.gate(Gate::below("nonzero_mean_branch", ((centre - expected) / expected).abs(), 1e-3));

    let caps = [1.5, 10.0, 100.0, 1000.0, 0.1 * g.length()];
    out.gate(Gate::below("weight_invariants", weight_violation(&caps)?, 1e-10));

    let pairs: Vec<_> = (0..RANDOM_PAIRS).map(|_| (random_bumps(&mut rng), random_bumps(&mut rng))).collect();
    let fine = Grid::new(2 * g.n(), g.length())?;
    let (coarse, refined) = thread::scope(|s| {
        let h = s.spawn(|| sweep(fine, &pairs));
        let c = sweep(g, &pairs);
        (c, h.join().expect("sweep thread panicked"))
    });
    let (coarse, refined) = (coarse?, refined?);
    let mut table = Table::new("commutator", &["pair", "l", "m", "ratio", "ratio_refined"]);
    for (i, (c, r)) in coarse.iter().zip(&refined).enumerate() {
        for (k, &(l, m)) in ORDERS.iter().enumerate() {
            table.push(vec![i as f64, l as f64, m as f64, c[k], r[k]]);
        }
    }
    for (k, &(l, m)) in ORDERS.iter().enumerate() {
        let max_c = coarse.iter().map(|r| r[k]).fold(0.0, f64::max);
        let max_r = refined.iter().map(|r| r[k]).fold(0.0, f64::max);
        out.scalar(&format!("max_ratio_l{l}_m{m}"), max_c);
        let finite = if max_c.is_finite() && max_r.is_finite() { max_r / max_c } else { f64::NAN };
        out.gate(Gate::within(&format!("ratio_refinement_l{l}_m{m}"), finite, 0.5, 2.0));
    }
    out.tables.push(invariants_table(&[prepare(cfg)?.r0]));
    out.tables.push(table);
    Ok(out)
}

/// Transform of `A d^order/dx^order exp(-((x - a)/sigma)^2)` under the linear flow.
fn analytic_flow(order: i32, amp: f64, sigma: f64, shift: f64, t: f64, xi: f64) -> Complex64 {
    let base = amp * sigma * PI.sqrt() * (-sigma * sigma * xi * xi / 4.0).exp();
    let ik = Complex64::new(0.0, xi).powi(order);
    ik * base * Complex64::from_polar(1.0, -xi * shift - t * xi * xi.abs())
}

/// Sixth-order centred fourth difference of the analytic flow in `xi`.
fn fd_fourth(f: impl Fn(f64) -> Complex64, xi: f64) -> Complex64 {
    const C: [f64; 9] =
        [7.0 / 240.0, -2.0 / 5.0, 169.0 / 60.0, -122.0 / 15.0, 91.0 / 8.0, -122.0 / 15.0, 169.0 / 60.0, -2.0 / 5.0, 7.0 / 240.0];
    let h = 0.01;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in C.iter().enumerate() {
        acc += f(xi + (k as f64 - 4.0) * h) * *c;
    }
    acc / h.powi(4)
}

pub(super) fn run_eterm_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = prepare(cfg)?;
    require_zero_mean(&p)?;
    let g = p.grid;
    let mut ws = p.tr.workspace();
    let mut out = Outcome::new(metadata(cfg, &g, None), p.derived.clone());
    let order = match cfg.data.kind {
        DataKind::GaussianDerivative => Some(1),
        DataKind::GaussianSecondDerivative => Some(2),
        DataKind::CustomSamples => None,
    };
    if order.is_none() {
        out.note("finite-difference check needs analytic data; skipped for custom samples");
    }

    // t = 0: only the last term survives.
    let at0 = e_term_table(&p.tr, &mut ws, 0.0, &p.u0)?;
    let x4 = p.u0.values().iter().enumerate().map(|(j, v)| (g.x(j).powi(4) * v).powi(2)).sum::<f64>() * g.dx();
    let expected = (2.0 * PI).sqrt() * x4.sqrt();
    out.gate(Gate::below("initial_last_term", (at0.norms[9] - expected).abs() / expected, 1e-9));
    let others = (0..9).filter(|j| *j != DELTA_TERM).map(|j| at0.norms[j]).fold(0.0, f64::max);
    out.gate(Gate::below("initial_other_terms", others, 1e-300));

    let mut table = Table::new("eterm", &["t", "j", "norm", "bound", "ratio"]);
    let (mut identity, mut fd, mut non_finite) = (0.0f64, 0.0f64, 0usize);
    for t in [0.5, 1.0, 2.0] {
        let tab = e_term_table(&p.tr, &mut ws, t, &p.u0)?;
        for j in 0..10 {
            table.push(vec![t, (j + 1) as f64, tab.norms[j], tab.bounds[j], tab.ratios[j]]);
            if j != DELTA_TERM && !tab.ratios[j].is_finite() {
                non_finite += 1;
            }
        }
        let terms = e_terms(&p.tr, &mut ws, t, &p.u0)?;
        let f4 = f_term(&p.tr, &mut ws, 4, t, &p.u0)?;
        let f4c = f4.spectrum.coeffs();
        let sum: Vec<Complex64> = (0..g.n()).map(|i| terms.iter().map(|e| e[i]).sum()).collect();
        let scale = f4c.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let worst = (1..g.n()).fold(0.0f64, |m, i| m.max((sum[i] - f4c[i]).norm()));
        identity = identity.max(worst / scale);
        if let Some(order) = order {
            let d = &cfg.data;
            let flow = |xi: f64| analytic_flow(order, d.amplitude, d.width, d.shift, t, xi);
            let (mut w, mut s) = (0.0f64, 0.0f64);
            for (i, v) in sum.iter().enumerate() {
                let xi = g.xi(i);
                if (0.3..=10.0).contains(&xi.abs()) {
                    let oracle = fd_fourth(flow, xi);
                    w = w.max((v - oracle).norm());
                    s = s.max(oracle.norm());
                }
            }
            fd = fd.max(w / s);
        }
    }
    out.gate(Gate::below("expansion_identity", identity, 1e-8));
    if order.is_some() {
        out.gate(Gate::below("expansion_vs_finite_differences", fd, 1e-6));
    }
    out.gate(Gate::below("non_finite_ratios", non_finite as f64, 0.5));
    out.tables.push(invariants_table(&[p.r0]));
    out.tables.push(table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_sweep_is_clean() {
        assert!(weight_violation(&[1.5, 7.0, 300.0]).unwrap() < 1e-10);
    }

    #[test]
    fn analytic_flow_at_zero_time() {
        // d/dx exp(-x^2) -> i xi sqrt(pi) exp(-xi^2 / 4).
        let v = analytic_flow(1, 1.0, 1.0, 0.0, 0.0, 0.7);
        let expected = Complex64::new(0.0, 0.7 * PI.sqrt() * (-0.49f64 / 4.0).exp());
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn fd_stencil_is_exact_on_quartics() {
        let d = fd_fourth(|x| Complex64::new(x.powi(4), 0.0), 0.3);
        assert!((d.re - 24.0).abs() < 1e-6);
    }

    #[test]
    fn random_bumps_are_seeded() {
        let a = random_bumps(&mut ChaCha8Rng::seed_from_u64(7));
        let b = random_bumps(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }
}
