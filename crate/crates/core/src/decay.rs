//! Fourth xi-derivative expansion of the free flow, the jump of
//! `d^3 u_hat / d xi^3` at the origin, and the jump law.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::math::powi;
use crate::error::{Error, Result};
use crate::fit;
use crate::grid::{Field, Spectrum};
use crate::integrator::{invariants, tstar_quadratic, Trajectory};
use crate::spectral::{derivative, linear_propagator, propagator_factor, Transform, Workspace};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smallest grid the jump stencil accepts.
pub const MIN_JUMP_MODES: usize = 64;

/// `|u_hat(0)|` allowed, relative to `max |u_hat|`, when zero mean is required.
pub const MEAN_TOLERANCE: f64 = 1e-10;

/// Number of records [`second_momentum_probe`] needs on `[0, t*]`.
pub const PROBE_MIN_SAMPLES: usize = 64;

/// `d^m u_hat0 / d xi^m`, the transform of `(-i x)^m u0`.
pub fn moment_spectrum(tr: &Transform, ws: &mut Workspace, u0: &Field, m: u32) -> Result<Spectrum> {
    let g = *u0.grid();
    let weighted = Field::new(g, u0.values().iter().enumerate().map(|(j, v)| powi(g.x(j), m as i32) * v).collect())?;
    let factor = match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    Ok(tr.forward(&weighted, ws)?.map_indexed(|_, c| c * factor))
}

fn require_zero_mean(spec: &Spectrum) -> Result<()> {
    let scale = spec.coeffs().iter().fold(0.0, |m: f64, c| m.max(c.norm()));
    let value = spec.coeffs()[0].norm();
    if value > MEAN_TOLERANCE * scale {
        return Err(Error::NonZeroMean { value });
    }
    Ok(())
}

/// Derivatives of `exp(phi)`, `phi = -i t xi|xi|`, divided by `exp(phi)`,
/// with every delta term dropped. `sign` is `sgn(xi)`, taken as the side
/// of approach at `xi = 0`.
fn phase_derivatives(t: f64, xi: f64, sign: f64) -> [Complex64; 5] {
    let d1 = Complex64::new(0.0, -2.0 * t * xi.abs());
    let d2c = Complex64::new(0.0, -2.0 * t * sign);
    [
        Complex64::new(1.0, 0.0),
        d1,
        d1 * d1 + d2c,
        d1 * d1 * d1 + d1 * d2c * 3.0,
        d1 * d1 * d1 * d1 + d1 * d1 * d2c * 6.0 + d2c * d2c * 3.0,
    ]
}

const BINOMIAL: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// Regular part of `d^j/dxi^j (exp(-i t xi|xi|) u_hat0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FTerm {
    /// Values at every mode; the `xi = 0` entry holds the mean of the one-sided limits.
    pub spectrum: Spectrum,
    pub right_limit: Complex64,
    pub left_limit: Complex64,
}

/// Leibniz expansion with `d^m u_hat0` taken from moments of `u0`.
pub fn f_term(tr: &Transform, ws: &mut Workspace, j: u32, t: f64, u0: &Field) -> Result<FTerm> {
    if j > 4 {
        return Err(Error::InvalidArgument("f_term order must be at most 4"));
    }
    let moments: Vec<Spectrum> = (0..=j).map(|m| moment_spectrum(tr, ws, u0, m)).collect::<Result<_>>()?;
    if j >= 3 {
        require_zero_mean(&moments[0])?;
    }
    let g = *u0.grid();
    let ju = j as usize;
    let eval = |i: usize, sign: f64| {
        let d = phase_derivatives(t, g.xi(i), sign);
        let mut acc = ZERO;
        for m in 0..=ju {
            acc += d[ju - m] * moments[m].coeffs()[i] * BINOMIAL[ju][m];
        }
        acc * propagator_factor(&g, i, t)
    };
    let mut coeffs = vec![ZERO; g.n()];
    for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = eval(i, g.xi(i).signum());
    }
    let right_limit = eval(0, 1.0);
    let left_limit = eval(0, -1.0);
    coeffs[0] = (right_limit + left_limit) * 0.5;
    Ok(FTerm { spectrum: Spectrum::new(g, coeffs)?, right_limit, left_limit })
}

/// Index (0-based) of the distributional term in the ten-term expansion.
pub const DELTA_TERM: usize = 4;

/// The ten terms `E_1 .. E_10` evaluated at every mode; the delta term is left zero.
pub fn e_terms(tr: &Transform, ws: &mut Workspace, t: f64, u0: &Field) -> Result<[Vec<Complex64>; 10]> {
    let d: Vec<Spectrum> = (0..=4).map(|m| moment_spectrum(tr, ws, u0, m)).collect::<Result<_>>()?;
    require_zero_mean(&d[0])?;
    let g = *u0.grid();
    let n = g.n();
    let mut out: [Vec<Complex64>; 10] = core::array::from_fn(|_| vec![ZERO; n]);
    let i1 = Complex64::new(0.0, 1.0);
    for i in 0..n {
        let xi = g.xi(i);
        let ax = xi.abs();
        let sg = if i == 0 { 0.0 } else { xi.signum() };
        let e = propagator_factor(&g, i, t);
        let c = |m: usize| d[m].coeffs()[i];
        let t2 = t * t;
        let t3 = t2 * t;
        out[0][i] = e * c(0) * (-12.0 * t2);
        out[1][i] = e * c(0) * i1 * (48.0 * t3 * xi * ax);
        out[2][i] = e * c(0) * (16.0 * t2 * t2 * powi(xi, 4));
        out[3][i] = e * c(1) * (-48.0 * t2 * xi);
        out[5][i] = e * c(1) * i1 * (32.0 * t3 * ax * xi * xi);
        out[6][i] = e * c(2) * (-24.0 * t2 * xi * xi);
        out[7][i] = e * c(2) * i1 * (-12.0 * t * sg);
        out[8][i] = e * c(3) * i1 * (-8.0 * t * ax);
        out[9][i] = e * c(4);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ETermTable {
    pub t: f64,
    /// `||E_j||_2` in `L^2(d xi)`; the delta entry is NaN.
    pub norms: [f64; 10],
    /// Majorants built from weighted derivatives of `u0`.
    pub bounds: [f64; 10],
    pub ratios: [f64; 10],
}

/// Norms of the expansion terms next to their data-side majorants:
/// `||u0||`, `||u0''||`, `||u0''''||`, `||u0|| + ||x u0'||`,
/// `||x u0'''|| + ||u0''||`, `||u0|| + ||x^2 u0''|| + ||x u0'||`,
/// `||x^2 u0||`, `||x^3 u0'|| + ||x^2 u0||`, `||x^4 u0||`.
pub fn e_term_table(tr: &Transform, ws: &mut Workspace, t: f64, u0: &Field) -> Result<ETermTable> {
    let terms = e_terms(tr, ws, t, u0)?;
    let g = *u0.grid();
    let mut norms = [0.0; 10];
    for (n, term) in norms.iter_mut().zip(&terms) {
        *n = libm::sqrt(g.dxi() * term.iter().map(|c| c.norm_sqr()).sum::<f64>());
    }
    norms[DELTA_TERM] = f64::NAN;
    let spec = tr.forward(u0, ws)?;
    let mut weighted = |p: u32, order: u32| -> Result<f64> {
        let d = tr.inverse(&derivative(&spec, order)?, ws)?;
        let acc: f64 = d.values().iter().enumerate().map(|(j, v)| powi(powi(g.x(j), p as i32) * v, 2)).sum();
        Ok(libm::sqrt(g.dx() * acc))
    };
    let n00 = weighted(0, 0)?;
    let n02 = weighted(0, 2)?;
    let n04 = weighted(0, 4)?;
    let n11 = weighted(1, 1)?;
    let n13 = weighted(1, 3)?;
    let n22 = weighted(2, 2)?;
    let n20 = weighted(2, 0)?;
    let n31 = weighted(3, 1)?;
    let n40 = weighted(4, 0)?;
    let bounds = [n00, n02, n04, n00 + n11, f64::NAN, n13 + n02, n00 + n22 + n11, n20, n31 + n20, n40];
    let mut ratios = [0.0; 10];
    for j in 0..10 {
        ratios[j] = if j == DELTA_TERM {
            f64::NAN
        } else if bounds[j] == 0.0 {
            if norms[j] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            norms[j] / bounds[j]
        };
    }
    Ok(ETermTable { t, norms, bounds, ratios })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEstimate {
    /// Real part of `d^3 u_hat(0+) - d^3 u_hat(0-)`.
    pub value: f64,
    /// Imaginary part; zero for a Hermitian spectrum.
    pub imag_residual: f64,
}

/// One-sided 5-point third derivative at the first sample, spacing `step * h`.
fn one_sided_third(f: &[Complex64; 9], step: usize, h: f64) -> Complex64 {
    const W: [f64; 5] = [-5.0, 18.0, -24.0, 14.0, -3.0];
    let mut acc = ZERO;
    for (q, w) in W.iter().enumerate() {
        acc += f[q * step] * *w;
    }
    let hs = step as f64 * h;
    acc / (2.0 * hs * hs * hs)
}

/// Jump of the third xi-derivative at the origin: one-sided stencils on
/// each side, one Richardson step each.
pub fn jump_estimate(spec: &Spectrum) -> Result<JumpEstimate> {
    let n = spec.grid().n();
    if n < MIN_JUMP_MODES {
        return Err(Error::InsufficientModes { n, required: MIN_JUMP_MODES });
    }
    let h = spec.grid().dxi();
    let c = spec.coeffs();
    let right: [Complex64; 9] = core::array::from_fn(|k| c[k]);
    let left: [Complex64; 9] = core::array::from_fn(|k| if k == 0 { c[0] } else { c[n - k] });
    let rich = |f: &[Complex64; 9]| (one_sided_third(f, 1, h) * 4.0 - one_sided_third(f, 2, h)) / 3.0;
    let d_right = rich(&right);
    // Mirrored samples flip the sign of an odd derivative.
    let d_left = -rich(&left);
    let j = d_right - d_left;
    Ok(JumpEstimate { value: j.re, imag_residual: j.im })
}

/// [`jump_estimate`] of `exp(i xi s) u_hat`, i.e. of `u(. + s)`. The jump is
/// unchanged by this factor; a shift that centres the solution keeps the
/// stencil resolved.
pub fn jump_estimate_shifted(spec: &Spectrum, shift: f64) -> Result<JumpEstimate> {
    let g = *spec.grid();
    let shifted = spec.map_indexed(|i, c| {
        let (s, co) = libm::sincos(g.xi(i) * shift);
        c * Complex64::new(co, s)
    });
    jump_estimate(&shifted)
}

/// `int x u^2 / int u^2` over the whole cell (zero for `u = 0`).
pub fn energy_centroid(u: &Field) -> f64 {
    let g = u.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, v) in u.values().iter().enumerate() {
        num += g.x(j) * v * v;
        den += v * v;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Jump of a field's spectrum, measured after shifting its energy centroid to the origin.
pub fn centred_jump(tr: &Transform, ws: &mut Workspace, u: &Field) -> Result<JumpEstimate> {
    let spec = tr.forward(u, ws)?;
    jump_estimate_shifted(&spec, energy_centroid(u))
}

/// Rounding floor of the stencil: `64 eps max|u_hat| / dxi^3`.
pub fn jump_noise_floor(spec: &Spectrum) -> f64 {
    let h = spec.grid().dxi();
    let scale = spec.coeffs().iter().fold(0.0, |m: f64, c| m.max(c.norm()));
    64.0 * f64::EPSILON * scale / (h * h * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModel {
    pub mu1: f64,
    pub l2sq: f64,
    pub kappa: f64,
    pub tstar: Option<f64>,
}

impl DecayModel {
    pub fn new(mu1: f64, l2sq: f64, kappa: f64) -> Result<Self> {
        let tstar = tstar_quadratic(mu1, l2sq)?;
        Ok(Self { mu1, l2sq, kappa, tstar })
    }
}

/// `J(t) = -6 kappa (t mu1 + t^2 ||u0||^2 / 4)`, factored so the root at `t*` is exact.
pub fn jump_model(model: &DecayModel, t: f64) -> f64 {
    let q = 0.25 * t * model.l2sq;
    match model.tstar {
        Some(ts) => -6.0 * model.kappa * q * (t - ts),
        None => -6.0 * model.kappa * (t * model.mu1 + q * t),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub kappa: f64,
    pub mu1: f64,
    pub samples: Vec<(f64, f64)>,
    /// Largest `|J(t) / (-6 t mu1) - kappa| / |kappa|` over the samples.
    pub max_deviation: f64,
}

/// Least-squares slope of the free-flow jump against `-6 t mu1`.
pub fn calibrate_kappa(tr: &Transform, ws: &mut Workspace, u0: &Field, t_samples: &[f64]) -> Result<Calibration> {
    let rec = invariants(tr, ws, 0.0, u0, 0)?;
    let mu1 = rec.momentum;
    if !(mu1.abs() > 1e-12 * rec.l2.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateFit("first momentum vanishes"));
    }
    let spec0 = tr.forward(u0, ws)?;
    let mut xs = Vec::with_capacity(t_samples.len());
    let mut ys = Vec::with_capacity(t_samples.len());
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let u = tr.inverse(&linear_propagator(&spec0, t), ws)?;
        let j = centred_jump(tr, ws, &u)?.value;
        xs.push(-6.0 * t * mu1);
        ys.push(j);
        samples.push((t, j));
    }
    let kappa = fit::slope_through_origin(&xs, &ys)?;
    if !kappa.is_finite() || kappa == 0.0 {
        return Err(Error::DegenerateFit("zero slope"));
    }
    let max_deviation = xs
        .iter()
        .zip(&ys)
        .filter(|(x, _)| **x != 0.0)
        .map(|(x, y)| ((y / x - kappa) / kappa).abs())
        .fold(0.0, f64::max);
    Ok(Calibration { kappa, mu1, samples, max_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    /// `int_0^t* int x^2 u dx dt`
    pub value: f64,
    /// `|I_h - I_2h| / 3` from the trapezoid rule on all and on every other sample.
    pub error: f64,
    pub samples: usize,
}

/// Time integral of the second moment over `[0, t*]` from the trajectory records.
pub fn second_momentum_probe(traj: &Trajectory, tstar: f64) -> Result<ProbeResult> {
    if !(tstar > 0.0) {
        return Err(Error::InvalidArgument("t* must be positive"));
    }
    let pts: Vec<(f64, f64)> = traj
        .records
        .iter()
        .filter(|r| r.t >= 0.0 && r.t <= tstar * (1.0 + 1e-12))
        .map(|r| (r.t, r.second_moment))
        .collect();
    let available = pts.last().map_or(0.0, |p| p.0);
    if pts.first().map_or(true, |p| p.0 != 0.0) || (available - tstar).abs() > 1e-9 * tstar {
        return Err(Error::InsufficientSpan { needed: tstar, available });
    }
    if pts.len() < PROBE_MIN_SAMPLES {
        return Err(Error::InsufficientSpan { needed: tstar, available });
    }
    let trap = |p: &[(f64, f64)]| p.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum::<f64>();
    let fine = trap(&pts);
    let mut coarse_pts: Vec<(f64, f64)> = pts.iter().step_by(2).copied().collect();
    if coarse_pts.last() != pts.last() {
        coarse_pts.push(pts[pts.len() - 1]);
    }
    let coarse = trap(&coarse_pts);
    Ok(ProbeResult { value: fine, error: (fine - coarse).abs() / 3.0, samples: pts.len() })
}

/// `int_{-L/2}^{L/2} x^2 W(t)u dx` evaluated from the spectrum of `u`,
/// exact for band-limited periodic fields.
pub fn free_second_moment(spec: &Spectrum, t: f64) -> f64 {
    let g = *spec.grid();
    let l = g.length();
    let w = linear_propagator(spec, t);
    let mut acc = 0.0;
    for (i, c) in w.coeffs().iter().enumerate() {
        let k = g.mode(i);
        let ik = if k == 0 {
            l * l * l / 12.0
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * l * l * l / (2.0 * PI * PI * (k * k) as f64)
        };
        acc += c.re * ik;
    }
    acc / l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn synthetic_cubic_jump() {
        let g = Grid::new(2048, 2.0 * PI / 0.02).unwrap();
        let spec = Spectrum::new(
            g,
            (0..g.n())
                .map(|i| {
                    let xi = g.xi(i);
                    Complex64::new(powi(xi.abs(), 3) * libm::exp(-xi * xi), 0.0)
                })
                .collect(),
        )
        .unwrap();
        let j = jump_estimate(&spec).unwrap();
        assert!((j.value - 12.0).abs() < 0.12, "{}", j.value);
        assert!(j.imag_residual.abs() < 1e-9);
    }

    #[test]
    fn smooth_spectrum_has_no_jump() {
        let g = Grid::new(1024, 1000.0).unwrap();
        let spec =
            Spectrum::new(g, (0..g.n()).map(|i| Complex64::new(libm::exp(-powi(g.xi(i), 2)), 0.0)).collect())
                .unwrap();
        assert!(jump_estimate(&spec).unwrap().value.abs() < 1e-3);
    }

    #[test]
    fn rejects_small_grids() {
        let g = Grid::new(32, 10.0).unwrap();
        let spec = Spectrum::new(g, vec![ZERO; 32]).unwrap();
        assert_eq!(jump_estimate(&spec), Err(Error::InsufficientModes { n: 32, required: 64 }));
    }

    #[test]
    fn model_roots() {
        let sp = libm::sqrt(PI);
        let m = DecayModel::new(-sp, libm::sqrt(PI / 2.0), 2.0).unwrap();
        assert_eq!(jump_model(&m, 0.0), 0.0);
        assert_eq!(jump_model(&m, m.tstar.unwrap()), 0.0);
        let t = 1.3;
        let direct = -12.0 * (t * m.mu1 + t * t / 4.0 * m.l2sq);
        assert!((jump_model(&m, t) - direct).abs() < 1e-13);
        let z = DecayModel::new(0.0, 2.0, 2.0).unwrap();
        assert_eq!(z.tstar, None);
        for t in [-1.0, 0.5, 3.0] {
            assert!((jump_model(&z, t) + 12.0 * t * t / 4.0 * 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn f_term_at_time_zero_is_moment() {
        let g = Grid::new(1024, 80.0).unwrap();
        let tr = Transform::new(g).unwrap();
        let mut ws = tr.workspace();
        let u0 = crate::data::gaussian_derivative(g, 1.0, 1.0, 0.0).unwrap();
        let f0 = f_term(&tr, &mut ws, 0, 0.7, &u0).unwrap();
        let w = linear_propagator(&tr.forward(&u0, &mut ws).unwrap(), 0.7);
        assert_eq!(f0.spectrum.coeffs()[1..], w.coeffs()[1..]);
        let f4 = f_term(&tr, &mut ws, 4, 0.0, &u0).unwrap();
        let m4 = moment_spectrum(&tr, &mut ws, &u0, 4).unwrap();
        assert_eq!(f4.spectrum.coeffs()[1..], m4.coeffs()[1..]);
    }

    #[test]
    fn f_term_requires_zero_mean() {
        let g = Grid::new(256, 40.0).unwrap();
        let tr = Transform::new(g).unwrap();
        let mut ws = tr.workspace();
        let u0 = Field::from_fn(g, |x| libm::exp(-x * x)).unwrap();
        assert!(f_term(&tr, &mut ws, 2, 1.0, &u0).is_ok());
        assert!(matches!(f_term(&tr, &mut ws, 3, 1.0, &u0), Err(Error::NonZeroMean { .. })));
    }
}
