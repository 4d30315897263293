//! Line-normalized transforms and Fourier multipliers.
//!
//! Odd symbols (Hilbert, odd derivatives, the propagator phase) are set to
//! zero at the Nyquist mode so that real fields stay real.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{RealFft, RealFftScratch};
use crate::grid::{Field, Grid, Spectrum};

/// Highest derivative order accepted by [`derivative`].
pub const MAX_DERIVATIVE: u32 = 8;

/// Default threshold for [`crate::weighted::boundary_contamination`].
pub const CONTAMINATION_LIMIT: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Forward/inverse transform bound to one grid. Shareable; each worker
/// brings its own [`Workspace`].
#[derive(Debug, Clone)]
pub struct Transform {
    grid: Grid,
    rfft: RealFft,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    fft: RealFftScratch,
    half: Vec<Complex64>,
    real: Vec<f64>,
}

impl Transform {
    pub fn new(grid: Grid) -> Result<Self> {
        Ok(Self { grid, rfft: RealFft::new(grid.n())? })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.grid.n();
        Workspace { fft: self.rfft.make_scratch(), half: vec![ZERO; n / 2 + 1], real: vec![0.0; n] }
    }

    pub fn forward(&self, field: &Field, ws: &mut Workspace) -> Result<Spectrum> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let dx = self.grid.dx();
        self.rfft.forward(field.values(), &mut ws.half, &mut ws.fft);
        let mut coeffs = vec![ZERO; n];
        for k in 0..=n / 2 {
            // The node offset -L/2 contributes exp(i pi k) = (-1)^k.
            let sign = if k % 2 == 0 { dx } else { -dx };
            let c = ws.half[k] * sign;
            if k == n / 2 {
                coeffs[k] = Complex64::new(c.re, 0.0);
            } else {
                coeffs[k] = c;
                if k > 0 {
                    coeffs[n - k] = c.conj();
                }
            }
        }
        Ok(Spectrum::from_parts(self.grid, coeffs))
    }

    /// Inverse transform. For a non-Hermitian input this returns the real
    /// part of the exact inverse.
    pub fn inverse(&self, spec: &Spectrum, ws: &mut Workspace) -> Result<Field> {
        if spec.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.grid.n();
        let inv_dx = 1.0 / self.grid.dx();
        let c = spec.coeffs();
        for k in 0..=n / 2 {
            let sign = if k % 2 == 0 { inv_dx } else { -inv_dx };
            let sym = if k == 0 || k == n / 2 {
                Complex64::new(c[k].re, 0.0)
            } else {
                (c[k] + c[n - k].conj()) * 0.5
            };
            ws.half[k] = sym * sign;
        }
        self.rfft.inverse(&ws.half, &mut ws.real, &mut ws.fft);
        Field::new(self.grid, ws.real.clone())
    }
}

fn is_nyquist(grid: &Grid, i: usize) -> bool {
    i == grid.nyquist_index()
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Hilbert transform, multiplier `-i sgn(xi)` with `sgn(0) = 0`.
pub fn hilbert(spec: &Spectrum) -> Spectrum {
    let g = *spec.grid();
    spec.map_indexed(|i, c| {
        if is_nyquist(&g, i) {
            return ZERO;
        }
        let s = sgn(g.xi(i));
        Complex64::new(c.im * s, -c.re * s)
    })
}

/// `(i xi)^order`; odd orders vanish at the Nyquist mode.
pub fn derivative(spec: &Spectrum, order: u32) -> Result<Spectrum> {
    if order > MAX_DERIVATIVE {
        return Err(Error::InvalidArgument("derivative order above 8"));
    }
    let g = *spec.grid();
    Ok(spec.map_indexed(|i, c| {
        if order % 2 == 1 && is_nyquist(&g, i) {
            return ZERO;
        }
        c * derivative_symbol(g.xi(i), order)
    }))
}

pub(crate) fn derivative_symbol(xi: f64, order: u32) -> Complex64 {
    let mag = libm::pow(xi, order as f64);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// `exp(-i t xi|xi|)` at storage index `i`, with the Nyquist mode held fixed.
pub fn propagator_factor(grid: &Grid, i: usize, t: f64) -> Complex64 {
    if is_nyquist(grid, i) {
        return Complex64::new(1.0, 0.0);
    }
    let xi = grid.xi(i);
    let (s, c) = libm::sincos(t * xi * xi.abs());
    Complex64::new(c, -s)
}

/// Free evolution `W(t)`: multiplies by `exp(-i t xi|xi|)`.
pub fn linear_propagator(spec: &Spectrum, t: f64) -> Spectrum {
    let g = *spec.grid();
    spec.map_indexed(|i, c| c * propagator_factor(&g, i, t))
}

/// Highest retained `|k|` for a keep fraction: modes with `|k| > keep * n/2` are removed.
pub fn dealias_cutoff(n: usize, keep_fraction: f64) -> usize {
    libm::floor(keep_fraction * (n / 2) as f64 + 1e-9) as usize
}

pub fn dealias(spec: &Spectrum, keep_fraction: f64) -> Result<Spectrum> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument("keep fraction must lie in (0, 1]"));
    }
    let g = *spec.grid();
    let cut = dealias_cutoff(g.n(), keep_fraction) as i64;
    Ok(spec.map_indexed(|i, c| if g.mode(i).abs() > cut { ZERO } else { c }))
}

/// `d^l/dx^l ( a H(d^m f/dx^m) - H(a d^m f/dx^m) )`.
///
/// Both inputs are projected onto the 2/3 band before the pointwise
/// product. `a` enters through `a - a(0)`: constants commute with `H`, so a
/// constant `a` yields an exact zero. Fails if `f` or `a f` reaches the
/// outer 5% of the domain above [`CONTAMINATION_LIMIT`].
pub fn commutator(tr: &Transform, ws: &mut Workspace, a: &Field, f: &Field, l: u32, m: u32) -> Result<Field> {
    if l + m == 0 || l + m > 6 {
        return Err(Error::InvalidArgument("commutator needs 1 <= l + m <= 6"));
    }
    if a.grid() != tr.grid() || f.grid() != tr.grid() {
        return Err(Error::GridMismatch);
    }
    let limit = CONTAMINATION_LIMIT;
    for probe in [f.clone(), a.mul(f)?] {
        let ratio = crate::weighted::boundary_contamination(&probe);
        if ratio > limit {
            return Err(Error::BoundaryContamination { ratio, limit });
        }
    }
    let centre = a.values()[tr.grid().n() / 2];
    let a_var = Field::new(*a.grid(), a.values().iter().map(|v| v - centre).collect())?;
    if a_var.max_abs() == 0.0 {
        return Ok(Field::zeros(*tr.grid()));
    }
    let keep = 2.0 / 3.0;
    let a_var = tr.inverse(&dealias(&tr.forward(&a_var, ws)?, keep)?, ws)?;
    let g_hat = dealias(&derivative(&tr.forward(f, ws)?, m)?, keep)?;
    let g = tr.inverse(&g_hat, ws)?;
    let hg = tr.inverse(&hilbert(&g_hat), ws)?;
    let first = a_var.mul(&hg)?;
    let second = tr.inverse(&hilbert(&tr.forward(&a_var.mul(&g)?, ws)?), ws)?;
    let diff = first.sub(&second)?;
    if l == 0 {
        return Ok(diff);
    }
    tr.inverse(&derivative(&tr.forward(&diff, ws)?, l)?, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::powi;
    use core::f64::consts::PI;

    fn setup(n: usize, l: f64) -> (Grid, Transform, Workspace) {
        let g = Grid::new(n, l).unwrap();
        let tr = Transform::new(g).unwrap();
        let ws = tr.workspace();
        (g, tr, ws)
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn single_cosine_mode() {
        let (g, tr, mut ws) = setup(32, 10.0);
        let f = Field::from_fn(g, |x| libm::cos(2.0 * PI * x / 10.0)).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        for i in 0..32 {
            let expect = if g.mode(i).abs() == 1 { 5.0 } else { 0.0 };
            assert!((s.coeffs()[i] - Complex64::new(expect, 0.0)).norm() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn gaussian_matches_line_transform() {
        let (g, tr, mut ws) = setup(1024, 80.0);
        let f = Field::from_fn(g, |x| libm::exp(-x * x)).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        for i in 0..1024 {
            let xi = g.xi(i);
            let expect = libm::sqrt(PI) * libm::exp(-xi * xi / 4.0);
            assert!((s.coeffs()[i] - Complex64::new(expect, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval_and_hermitian() {
        let (g, tr, mut ws) = setup(256, 20.0);
        let f = Field::from_fn(g, |x| libm::exp(-x * x / 3.0) * (1.0 + libm::sin(2.0 * x))).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        let lhs = s.l2_norm_sq();
        let rhs = powi(f.l2_norm(), 2);
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(s.hermitian_defect() < 1e-14);
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let (g, tr, mut ws) = setup(64, 2.0 * PI);
        let f = Field::from_fn(g, libm::cos).unwrap();
        let h = tr.inverse(&hilbert(&tr.forward(&f, &mut ws).unwrap()), &mut ws).unwrap();
        let expect = Field::from_fn(g, libm::sin).unwrap();
        assert!(max_diff(&h, &expect) < 1e-13);
    }

    #[test]
    fn hilbert_squared_removes_mean() {
        let (g, tr, mut ws) = setup(128, 30.0);
        let f = Field::from_fn(g, |x| libm::exp(-x * x) + 0.3).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        let hh = tr.inverse(&hilbert(&hilbert(&s)), &mut ws).unwrap();
        let mean = f.integral() / g.length();
        for (a, b) in hh.values().iter().zip(f.values()) {
            assert!((a + (b - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let (g, tr, mut ws) = setup(64, 7.0);
        let w = 2.0 * PI / 7.0;
        let f = Field::from_fn(g, |x| libm::sin(w * x)).unwrap();
        let d = tr.inverse(&derivative(&tr.forward(&f, &mut ws).unwrap(), 1).unwrap(), &mut ws).unwrap();
        let expect = Field::from_fn(g, |x| w * libm::cos(w * x)).unwrap();
        assert!(max_diff(&d, &expect) < 1e-12);
        let s = tr.forward(&f, &mut ws).unwrap();
        assert_eq!(derivative(&s, 0).unwrap(), s);
        assert!(derivative(&s, 9).is_err());
    }

    #[test]
    fn fourth_derivative_of_gaussian() {
        let (g, tr, mut ws) = setup(1024, 80.0);
        let f = Field::from_fn(g, |x| libm::exp(-x * x)).unwrap();
        let d = tr.inverse(&derivative(&tr.forward(&f, &mut ws).unwrap(), 4).unwrap(), &mut ws).unwrap();
        let expect =
            Field::from_fn(g, |x| (16.0 * powi(x, 4) - 48.0 * x * x + 12.0) * libm::exp(-x * x)).unwrap();
        assert!(max_diff(&d, &expect) < 1e-8);
    }

    #[test]
    fn propagator_identity_unitarity_group() {
        let (g, tr, mut ws) = setup(512, 40.0);
        let f = Field::from_fn(g, |x| -2.0 * x * libm::exp(-x * x)).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        assert_eq!(linear_propagator(&s, 0.0), s);
        for t in [0.3, -2.0, 17.5] {
            let w = linear_propagator(&s, t);
            assert!((libm::sqrt(w.l2_norm_sq()) - libm::sqrt(s.l2_norm_sq())).abs() < 1e-13);
            let back = linear_propagator(&w, -t);
            let err = back.coeffs().iter().zip(s.coeffs()).fold(0.0, |m: f64, (a, b)| m.max((a - b).norm()));
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn dealias_cutoffs() {
        assert_eq!(dealias_cutoff(12, 2.0 / 3.0), 4);
        assert_eq!(dealias_cutoff(12, 1.0), 6);
        let (g, tr, mut ws) = setup(48, 6.0);
        let f = Field::from_fn(g, |x| libm::exp(-x * x) * libm::cos(9.0 * x)).unwrap();
        let s = tr.forward(&f, &mut ws).unwrap();
        assert_eq!(dealias(&s, 1.0).unwrap(), s);
        let d = dealias(&s, 2.0 / 3.0).unwrap();
        for i in 0..48 {
            if g.mode(i).abs() > 16 {
                assert_eq!(d.coeffs()[i], ZERO);
            } else {
                assert_eq!(d.coeffs()[i], s.coeffs()[i]);
            }
        }
        assert!(dealias(&s, 0.0).is_err());
    }

    #[test]
    fn commutator_with_constant_is_zero() {
        let (g, tr, mut ws) = setup(256, 40.0);
        let a = Field::from_fn(g, |_| 2.5).unwrap();
        let f = Field::from_fn(g, |x| libm::exp(-x * x) * x).unwrap();
        let c = commutator(&tr, &mut ws, &a, &f, 1, 1).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn commutator_rejects_bad_orders_and_contamination() {
        let (g, tr, mut ws) = setup(256, 40.0);
        let a = Field::from_fn(g, |x| x).unwrap();
        let f = Field::from_fn(g, |x| libm::exp(-x * x)).unwrap();
        assert!(commutator(&tr, &mut ws, &a, &f, 0, 0).is_err());
        assert!(commutator(&tr, &mut ws, &a, &f, 4, 3).is_err());
        let wide = Field::from_fn(g, |x| libm::exp(-x * x / 200.0)).unwrap();
        assert!(matches!(
            commutator(&tr, &mut ws, &a, &wide, 0, 1),
            Err(Error::BoundaryContamination { .. })
        ));
    }
}
