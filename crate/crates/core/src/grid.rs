//! Uniform periodic grid on `[-L/2, L/2)`, real fields sampled on it, and
//! line-normalized spectra.
//!
//! Spectra are stored in FFT order: index `i < n/2` holds mode `k = i`,
//! index `i >= n/2` holds `k = i - n`. Coefficients approximate the line
//! transform `u_hat(xi) = int exp(-i xi x) u(x) dx`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::factorize;

/// Smallest grid accepted by [`Grid::new`].
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::InvalidGrid("n must be even"));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid("n must be at least 16"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid("length must be positive and finite"));
        }
        if factorize(n).is_none() {
            return Err(Error::InvalidGrid("n must factor into 2, 3 and 5"));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Frequency spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Node `x_j = -L/2 + j L / n`.
    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of storage index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index of signed mode `k`, for `-n/2 <= k < n/2`.
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(-n / 2 <= k && k < n / 2);
        k.rem_euclid(n) as usize
    }

    /// Frequency of storage index `i`.
    pub fn xi(&self, i: usize) -> f64 {
        self.mode(i) as f64 * self.dxi()
    }

    /// Frequencies in storage (FFT) order.
    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.xi(i)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }
}

/// Real samples of a function at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: alloc::vec![0.0; grid.n()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.n()).map(|j| f(grid.x(j))).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoid (periodic) quadrature `dx * sum u_j`.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid, values })
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Field { grid: self.grid, values })
    }

    pub fn scale(&self, c: f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }
}

/// Line-normalized Fourier coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::GridMismatch);
        }
        if let Some(index) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_parts(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.n());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of signed mode `k`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(k)]
    }

    /// `(1/2pi) dxi sum |c_k|^2`, which equals the squared L2 norm of the field.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.dxi() / (2.0 * PI) * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Largest `|c[-k] - conj(c[k])|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().fold(0.0, |m: f64, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = self.coeffs[0].im.abs();
        worst = worst.max(self.coeffs[n / 2].im.abs());
        for k in 1..n / 2 {
            worst = worst.max((self.coeffs[n - k] - self.coeffs[k].conj()).norm());
        }
        worst / scale
    }

    /// Multiplies every coefficient by `m(storage_index)`.
    pub fn map_indexed(&self, m: impl Fn(usize, Complex64) -> Complex64) -> Spectrum {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| m(i, c)).collect();
        Spectrum { grid: self.grid, coeffs }
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Spectrum { grid: self.grid, coeffs })
    }
}
