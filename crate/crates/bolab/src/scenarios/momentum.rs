use bolab_core::decay::second_momentum_probe;
use bolab_core::integrator::{evolve, momentum_law, tstar_general, InvariantRecord, TstarOutcome};

use super::{base_params, invariants_table, metadata, prepare, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::manifest::Gate;
use crate::output::Table;

/// `mu1 + (1/p) int_0^t int u^p` by the trapezoid rule over the records;
/// exact in `t` for `k = 0`.
fn predicted_momentum(records: &[InvariantRecord], k: u32, mu1: f64, l2sq: f64) -> Vec<f64> {
    if k == 0 {
        return records.iter().map(|r| momentum_law(r.t, mu1, l2sq)).collect();
    }
    let p = (2 * k + 2) as f64;
    let mut out = vec![0.0; records.len()];
    let Some(i0) = records.iter().position(|r| r.t == 0.0) else {
        return vec![f64::NAN; records.len()];
    };
    out[i0] = mu1;
    for i in i0 + 1..records.len() {
        let (a, b) = (&records[i - 1], &records[i]);
        out[i] = out[i - 1] + 0.5 * (b.t - a.t) * (a.power_integral + b.power_integral) / p;
    }
    for i in (0..i0).rev() {
        let (a, b) = (&records[i], &records[i + 1]);
        out[i] = out[i + 1] - 0.5 * (b.t - a.t) * (a.power_integral + b.power_integral) / p;
    }
    out
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = prepare(cfg)?;
    let k = cfg.nonlinearity;
    let t_end = cfg.time.t_end.unwrap_or(1.5 * p.time_scale(k));
    // A record at t* feeds the second-momentum probe.
    let tstar = p.derived.tstar.filter(|ts| *ts > 0.0 && *ts <= t_end);
    let traj = evolve(&p.u0, &base_params(cfg, t_end, tstar.into_iter().collect()))?;

    let mut out = Outcome::new(metadata(cfg, &p.grid, Some(&traj)), p.derived.clone());
    let (mu1, l2sq) = (p.mu1(), p.l2sq());
    let predicted = predicted_momentum(&traj.records, k, mu1, l2sq);
    let scale = if mu1 != 0.0 { mu1.abs() } else { 0.5 * l2sq * t_end.abs() };
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut table = Table::new("momentum", &["t", "mu_measured", "mu_predicted", "rel_error"]);
    let mut worst = 0.0f64;
    for (r, pred) in traj.records.iter().zip(&predicted) {
        let err = (r.momentum - pred).abs() / scale;
        worst = worst.max(err);
        table.push(vec![r.t, r.momentum, *pred, err]);
    }
    if mu1 == 0.0 {
        out.note("first momentum is zero; errors are relative to ||u0||^2 |t_end| / 2");
    }
    let r0 = traj.records.iter().find(|r| r.t == 0.0).copied().unwrap_or(p.r0);
    let i1_drift = traj.records.iter().map(|r| (r.i1 - r0.i1).abs()).fold(0.0, f64::max);
    let l2_drift = if r0.l2 > 0.0 {
        traj.records.iter().map(|r| (r.l2 / r0.l2 - 1.0).abs()).fold(0.0, f64::max)
    } else {
        traj.records.iter().map(|r| r.l2).fold(0.0, f64::max)
    };
    let h_drift = traj
        .records
        .iter()
        .map(|r| (r.hamiltonian - r0.hamiltonian).abs() / r0.hamiltonian.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let boundary = traj.records.iter().map(|r| r.boundary_ratio).fold(0.0, f64::max);

    out.gate(Gate::below("momentum_law_max_rel_error", worst, 1e-6));
    out.gate(Gate::below("i1_max_drift", i1_drift, 1e-10));
    out.gate(Gate::below("l2_max_rel_drift", l2_drift, 1e-8));
    if let (Some(m), Some(l)) = (p.derived.mu1_closed_form, p.derived.l2sq_closed_form) {
        out.gate(Gate::below("mu1_quadrature_vs_closed_form", (mu1 - m).abs(), 1e-10));
        out.gate(Gate::below("l2sq_quadrature_vs_closed_form", (l2sq - l).abs(), 1e-10));
    }
    out.scalar("hamiltonian_max_rel_drift", h_drift);
    out.scalar("boundary_ratio_max", boundary);

    if let Some(ts) = tstar {
        if let Some(r) = traj.records.iter().find(|r| (r.t - ts).abs() <= 1e-9 * ts) {
            out.scalar("momentum_at_tstar", r.momentum);
        }
        match second_momentum_probe(&traj, ts) {
            Ok(probe) => {
                out.scalar("second_momentum_probe", probe.value);
                out.scalar("second_momentum_probe_error", probe.error);
                out.scalar("second_momentum_probe_samples", probe.samples as f64);
            }
            Err(e) => out.note(format!("second-momentum probe skipped: {e}")),
        }
    }
    if t_end > 0.0 && mu1 != 0.0 {
        match tstar_general(&traj, k)? {
            TstarOutcome::Found(t) => out.scalar("tstar_from_records", t),
            TstarOutcome::NotBracketed { span } => {
                out.note(format!("momentum integral keeps its sign on [0, {span}]"))
            }
        }
    }
    out.tables.push(invariants_table(&traj.records));
    out.tables.push(table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, power: f64) -> InvariantRecord {
        InvariantRecord {
            t,
            i1: 0.0,
            l2: 1.0,
            momentum: 0.0,
            hamiltonian: 0.0,
            boundary_ratio: 0.0,
            second_moment: 0.0,
            power_integral: power,
        }
    }

    #[test]
    fn prediction_integrates_both_directions() {
        // Constant power 4 with p = 4: slope 1.
        let recs: Vec<_> = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|t| rec(*t, 4.0)).collect();
        let got = predicted_momentum(&recs, 1, 0.25, 0.0);
        for (r, g) in recs.iter().zip(&got) {
            assert!((g - (0.25 + r.t)).abs() < 1e-15);
        }
        let k0 = predicted_momentum(&recs, 0, -1.0, 2.0);
        assert_eq!(k0[4], 0.0);
    }
}
