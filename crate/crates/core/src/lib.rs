//! Pseudospectral solver for the generalized Benjamin-Ono equation
//! `u_t + H u_xx + u^(2k+1) u_x = 0` on a large periodic cell, with
//! weighted-norm and Fourier-side decay diagnostics.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod data;
pub mod decay;
pub mod error;
pub mod fft;
pub mod fit;
pub mod grid;
pub mod integrator;
pub mod spectral;
pub mod weighted;

mod math {
    /// Integer power by repeated squaring.
    #[inline]
    pub fn powi(x: f64, n: i32) -> f64 {
        let mut base = if n < 0 { 1.0 / x } else { x };
        let mut e = n.unsigned_abs();
        let mut acc = 1.0;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

pub use error::{Error, Result};
pub use grid::{Field, Grid, Spectrum};
pub use num_complex::Complex64;
