//! Gaussian-derivative initial data with closed-form scalars.

use core::f64::consts::PI;


use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::integrator::tstar_quadratic;
use crate::spectral::CONTAMINATION_LIMIT;
use crate::weighted::boundary_contamination;

/// `mu1 = int x u0`, `l2sq = ||u0||^2` and `t* = -4 mu1 / l2sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataScalars {
    pub mu1: f64,
    pub l2sq: f64,
    pub tstar: Option<f64>,
}

fn check(amplitude: f64, sigma: f64, shift: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument("width must be positive"));
    }
    if !(amplitude.is_finite() && shift.is_finite()) {
        return Err(Error::InvalidArgument("amplitude and shift must be finite"));
    }
    Ok(())
}

fn guarded(u: Field) -> Result<Field> {
    let ratio = boundary_contamination(&u);
    if ratio > CONTAMINATION_LIMIT {
        return Err(Error::BoundaryContamination { ratio, limit: CONTAMINATION_LIMIT });
    }
    Ok(u)
}

/// `A d/dx exp(-((x - a)/sigma)^2)`.
pub fn gaussian_derivative(grid: Grid, amplitude: f64, sigma: f64, shift: f64) -> Result<Field> {
    check(amplitude, sigma, shift)?;
    let s2 = sigma * sigma;
    guarded(Field::from_fn(grid, |x| {
        let y = x - shift;
        -2.0 * amplitude * y / s2 * libm::exp(-y * y / s2)
    })?)
}

/// Exact scalars of [`gaussian_derivative`] on the line; independent of the shift.
pub fn gaussian_derivative_scalars(amplitude: f64, sigma: f64) -> DataScalars {
    let mu1 = -amplitude * sigma * libm::sqrt(PI);
    let l2sq = amplitude * amplitude * libm::sqrt(PI / 2.0) / sigma;
    let tstar = if l2sq > 0.0 { tstar_quadratic(mu1, l2sq).ok().flatten() } else { None };
    DataScalars { mu1, l2sq, tstar }
}

/// `A d^2/dx^2 exp(-((x - a)/sigma)^2)`; zero mean and zero first momentum.
pub fn gaussian_second_derivative(grid: Grid, amplitude: f64, sigma: f64, shift: f64) -> Result<Field> {
    check(amplitude, sigma, shift)?;
    let s2 = sigma * sigma;
    guarded(Field::from_fn(grid, |x| {
        let y = x - shift;
        amplitude * (4.0 * y * y / (s2 * s2) - 2.0 / s2) * libm::exp(-y * y / s2)
    })?)
}

pub fn gaussian_second_derivative_scalars(amplitude: f64, sigma: f64) -> DataScalars {
    let l2sq = 3.0 * amplitude * amplitude * libm::sqrt(PI / 2.0) / (sigma * sigma * sigma);
    DataScalars { mu1: 0.0, l2sq, tstar: None }
}
