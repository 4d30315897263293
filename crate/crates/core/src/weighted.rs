//! Weighted norms, truncated weights, tail fits and the boundary guard.

use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::math::powi;
use crate::error::{Error, Result};
use crate::fit;
use crate::grid::{Field, Grid, Spectrum};
use crate::spectral::{Transform, Workspace, CONTAMINATION_LIMIT};

/// Fraction of `L` at each end of the domain inspected by [`boundary_contamination`].
pub const OUTER_FRACTION: f64 = 0.05;

/// Bound asserted for `x w'(x) / w(x)`.
pub const XW_BOUND: f64 = 3.0;

/// RMS log-residual above which a tail fit makes no claim.
pub const TAIL_RESIDUAL_LIMIT: f64 = 0.1;

/// Half-width of the trusted window, `L/4`.
pub fn trusted_half_width(grid: &Grid) -> f64 {
    0.25 * grid.length()
}

/// `max |u|` over `|x| >= (1/2 - OUTER_FRACTION) L`, divided by `max |u|`.
pub fn boundary_contamination(u: &Field) -> f64 {
    let g = u.grid();
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let edge = (0.5 - OUTER_FRACTION) * g.length();
    let outer = u
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| g.x(*j).abs() >= edge)
        .fold(0.0, |m: f64, (_, v)| m.max(v.abs()));
    outer / peak
}

fn bracket(x: f64) -> f64 {
    libm::sqrt(1.0 + x * x)
}

/// Truncated weight `w_N`: `<x>` on `|x| <= N`, `2N` on `|x| >= 3N`, and a C2
/// quintic Hermite blend in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    cap: f64,
    /// Blend `2N + r^3 (c0 + c1 r + c2 r^2)` in `r = (3N - |x|) / 2N`. Written
    /// around the plateau so it stays monotone in floating point there.
    tail: [f64; 3],
    xw_ratio: f64,
}

impl WeightSpec {
    /// Builds the blend and checks `0 <= w' <= 1`, `x w' <= 3 w` and the C1
    /// joins on a dense sample. Caps below 1.5 are rejected: there the
    /// blend cannot stay monotone.
    pub fn new(cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap >= 1.5) {
            return Err(Error::InvalidArgument("weight cap must be at least 1.5"));
        }
        let h = 2.0 * cap;
        let w0 = bracket(cap);
        let w1 = cap / w0;
        let w2 = 1.0 / (w0 * w0 * w0);
        let w3 = 2.0 * cap;
        // Quintic Hermite basis in s = 1 - r, expanded to monomials.
        let basis: [[f64; 6]; 4] = [
            [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
            [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
            [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
            [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
        ];
        let weights = [w0, h * w1, h * h * w2, w3];
        let mut poly = [0.0; 6];
        for (b, w) in basis.iter().zip(weights) {
            for (p, c) in poly.iter_mut().zip(b) {
                *p += w * c;
            }
        }
        // Taylor shift to r = 1 - s; the r^0..r^2 terms are the plateau.
        let mut tail = [0.0; 3];
        for (j, t) in (3..6).zip(tail.iter_mut()) {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for (k, c) in poly.iter().enumerate().skip(j) {
                if k > j {
                    binom = binom * k as f64 / (k - j) as f64;
                }
                acc += binom * c;
            }
            *t = if j % 2 == 1 { -acc } else { acc };
        }
        let mut spec = Self { cap, tail, xw_ratio: 0.0 };
        spec.xw_ratio = spec.verify()?;
        Ok(spec)
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Largest sampled `x w'(x) / w(x)`.
    pub fn xw_ratio(&self) -> f64 {
        self.xw_ratio
    }

    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.cap {
            bracket(a)
        } else if a >= 3.0 * self.cap {
            2.0 * self.cap
        } else {
            let r = (3.0 * self.cap - a) / (2.0 * self.cap);
            let [c0, c1, c2] = self.tail;
            2.0 * self.cap + r * r * r * (c0 + r * (c1 + r * c2))
        }
    }

    /// `w'(x)` (odd in `x`).
    pub fn slope(&self, x: f64) -> f64 {
        let a = x.abs();
        let d = if a <= self.cap {
            a / bracket(a)
        } else if a >= 3.0 * self.cap {
            0.0
        } else {
            let r = (3.0 * self.cap - a) / (2.0 * self.cap);
            let [c0, c1, c2] = self.tail;
            -r * r * (3.0 * c0 + r * (4.0 * c1 + r * 5.0 * c2)) / (2.0 * self.cap)
        };
        if x < 0.0 {
            -d
        } else {
            d
        }
    }

    fn verify(&self) -> Result<f64> {
        const SAMPLES: usize = 20_000;
        let top = 4.0 * self.cap;
        let mut ratio: f64 = 0.0;
        for i in 0..=SAMPLES {
            let x = top * i as f64 / SAMPLES as f64;
            let w = self.value(x);
            let d = self.slope(x);
            if !(-1e-12..=1.0 + 1e-12).contains(&d) {
                return Err(Error::InvalidArgument("weight slope outside [0, 1]"));
            }
            ratio = ratio.max(x * d / w);
        }
        if ratio > XW_BOUND + 1e-12 {
            return Err(Error::InvalidArgument("x w'/w exceeds 3"));
        }
        let blend = |r: f64| {
            let [c0, c1, c2] = self.tail;
            2.0 * self.cap + r * r * r * (c0 + r * (c1 + r * c2))
        };
        let blend_slope = |r: f64| {
            let [c0, c1, c2] = self.tail;
            -r * r * (3.0 * c0 + r * (4.0 * c1 + r * 5.0 * c2)) / (2.0 * self.cap)
        };
        let joins = [
            blend(1.0) - bracket(self.cap),
            blend_slope(1.0) - self.cap / bracket(self.cap),
            blend(0.0) - 2.0 * self.cap,
            blend_slope(0.0),
        ];
        if joins.iter().any(|d| d.abs() > 1e-10 * self.cap.max(1.0)) {
            return Err(Error::InvalidArgument("weight blend is not C1 at a knot"));
        }
        Ok(ratio)
    }
}

pub fn truncated_weight(spec: &WeightSpec, x: f64) -> f64 {
    spec.value(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub s: f64,
    pub r: f64,
    pub hs_norm: f64,
    pub weight_norm: f64,
    pub z_norm: f64,
    pub trusted_window: f64,
    /// False when the field fails the boundary guard; the weighted part is then not meaningful.
    pub reliable: bool,
}

/// `H^s` norm from the spectrum plus `||x|^r u|_2` over the trusted window.
pub fn z_norm(tr: &Transform, ws: &mut Workspace, u: &Field, s: f64, r: f64) -> Result<NormReport> {
    if !(0.0..=8.0).contains(&s) || !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument("need s in [0, 8] and r >= 0"));
    }
    let spec = tr.forward(u, ws)?;
    let hs_norm = hs_norm(&spec, s);
    let g = u.grid();
    let half = trusted_half_width(g);
    let mut acc = 0.0;
    for (j, v) in u.values().iter().enumerate() {
        let x = g.x(j);
        if x.abs() <= half {
            let w = if r == 0.0 { 1.0 } else { libm::pow(x.abs(), r) };
            acc += (w * v) * (w * v);
        }
    }
    let weight_norm = libm::sqrt(g.dx() * acc);
    Ok(NormReport {
        s,
        r,
        hs_norm,
        weight_norm,
        z_norm: libm::hypot(hs_norm, weight_norm),
        trusted_window: half,
        reliable: boundary_contamination(u) <= CONTAMINATION_LIMIT,
    })
}

/// `(dxi/2pi sum (1 + xi^2)^s |u_hat|^2)^(1/2)`.
pub fn hs_norm(spec: &Spectrum, s: f64) -> f64 {
    let g = spec.grid();
    let sum: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = g.xi(i);
            libm::pow(1.0 + xi * xi, s) * c.norm_sqr()
        })
        .sum();
    libm::sqrt(g.dxi() / (2.0 * PI) * sum)
}

/// `||w_N^p u||_2` over the whole grid, `p` in 1..=3.
pub fn weighted_l2_truncated(u: &Field, spec: &WeightSpec, power: u32) -> Result<f64> {
    if !(1..=3).contains(&power) {
        return Err(Error::InvalidArgument("weight power must be 1, 2 or 3"));
    }
    let g = u.grid();
    let acc: f64 = u
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = powi(spec.value(g.x(j)), power as i32);
            (w * v) * (w * v)
        })
        .sum();
    Ok(libm::sqrt(g.dx() * acc))
}

/// `||<x>^p u||_2` over the trusted window.
pub fn bracket_weighted_l2(u: &Field, power: u32) -> f64 {
    let g = u.grid();
    let half = trusted_half_width(g);
    let acc: f64 = u
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| g.x(*j).abs() <= half)
        .map(|(j, v)| {
            let x = g.x(j);
            let w = libm::pow(1.0 + x * x, 0.5 * power as f64);
            (w * v) * (w * v)
        })
        .sum();
    libm::sqrt(g.dx() * acc)
}

/// `x^power` times a smooth cutoff that is 1 on `|x| <= inner` and 0 on `|x| >= outer`.
pub fn windowed_coordinate(grid: Grid, power: u32, inner: f64, outer: f64) -> Result<Field> {
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::InvalidArgument("need 0 < inner < outer"));
    }
    Field::from_fn(grid, |x| powi(x, power as i32) * smooth_cutoff(x.abs(), inner, outer))
}

/// C-infinity step from 1 (at `inner`) to 0 (at `outer`).
pub fn smooth_cutoff(a: f64, inner: f64, outer: f64) -> f64 {
    if a <= inner {
        return 1.0;
    }
    if a >= outer {
        return 0.0;
    }
    let s = (a - inner) / (outer - inner);
    let bump = |y: f64| if y <= 0.0 { 0.0 } else { libm::exp(-1.0 / y) };
    let p = bump(1.0 - s);
    p / (p + bump(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// `C` in `|u| ~ C / |x|^q`; zero when the fit is rejected.
    pub amplitude: f64,
    pub exponent: f64,
    /// RMS residual of `log |u|`.
    pub residual: f64,
    pub reliable: bool,
}

/// Least-squares fit of `log |u|` against `log |x|` on `a <= |x| <= b`,
/// using 32 log-spaced abscissae on each side of the origin.
pub fn tail_amplitude(u: &Field, window: (f64, f64)) -> Result<TailFit> {
    let (a, b) = window;
    let g = u.grid();
    if !(a > 0.0 && b >= 2.0 * a) {
        return Err(Error::InvalidArgument("tail window must span at least one octave"));
    }
    if b > trusted_half_width(g) {
        return Err(Error::InvalidArgument("tail window leaves the trusted region"));
    }
    const TARGETS: usize = 32;
    let mut nodes: Vec<usize> = Vec::new();
    for i in 0..TARGETS {
        let x = a * libm::pow(b / a, i as f64 / (TARGETS - 1) as f64);
        for side in [x, -x] {
            let j = libm::round((side + 0.5 * g.length()) / g.dx()) as usize;
            if j < g.n() && !nodes.contains(&j) {
                nodes.push(j);
            }
        }
    }
    if nodes.len() < 8 {
        return Err(Error::InvalidArgument("tail window has fewer than 8 distinct nodes"));
    }
    let mut lx = Vec::with_capacity(nodes.len());
    let mut ly = Vec::with_capacity(nodes.len());
    for &j in &nodes {
        let v = u.values()[j].abs();
        if v > 0.0 {
            lx.push(libm::log(g.x(j).abs()));
            ly.push(libm::log(v));
        }
    }
    if lx.len() < nodes.len() {
        return Ok(TailFit { amplitude: 0.0, exponent: 0.0, residual: f64::INFINITY, reliable: false });
    }
    let (intercept, slope) = fit::affine(&lx, &ly)?;
    let residual = libm::sqrt(
        lx.iter().zip(&ly).map(|(x, y)| powi(y - intercept - slope * x, 2)).sum::<f64>() / lx.len() as f64,
    );
    let reliable = residual <= TAIL_RESIDUAL_LIMIT;
    Ok(TailFit {
        amplitude: if reliable { libm::exp(intercept) } else { 0.0 },
        exponent: -slope,
        residual,
        reliable,
    })
}
