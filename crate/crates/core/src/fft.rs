//! Mixed-radix Stockham FFT for lengths `2^a 3^b 5^c`, plus a real-input
//! transform that runs on a half-length complex plan.
//!
//! Plans are immutable after construction and can be shared between
//! workers; every call takes the caller's scratch buffers.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};

const TAU: f64 = core::f64::consts::TAU;

/// `exp(-2 pi i num / den)`, with the angle reduced before evaluation.
fn root(num: usize, den: usize) -> Complex64 {
    let num = num % den;
    let (s, c) = libm::sincos(TAU * num as f64 / den as f64);
    Complex64::new(c, -s)
}

#[inline(always)]
fn mul_neg_i(z: Complex64) -> Complex64 {
    Complex64::new(z.im, -z.re)
}

#[derive(Debug, Clone)]
struct Stage {
    radix: usize,
    m: usize,
    stride: usize,
    /// `(radix - 1)` twiddles per output block `j`: `W_{radix*m}^{j*r}`, r = 1..radix.
    twiddles: Vec<Complex64>,
}

/// Returns the radix sequence for `n`, or `None` if `n` has a prime factor above 5.
pub fn factorize(mut n: usize) -> Option<Vec<usize>> {
    if n == 0 {
        return None;
    }
    let mut radices = Vec::new();
    while n % 4 == 0 {
        radices.push(4);
        n /= 4;
    }
    for p in [2, 3, 5] {
        while n % p == 0 {
            radices.push(p);
            n /= p;
        }
    }
    (n == 1).then_some(radices)
}

/// Complex FFT plan (unnormalized, forward sign `-`).
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    stages: Vec<Stage>,
    roots5: [Complex64; 5],
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        let radices = factorize(n).ok_or(Error::InvalidGrid("length must factor into 2, 3 and 5"))?;
        let mut stages = Vec::with_capacity(radices.len());
        let mut len = n;
        let mut stride = 1;
        for &radix in &radices {
            let m = len / radix;
            let mut twiddles = Vec::with_capacity(m * (radix - 1));
            for j in 0..m {
                for r in 1..radix {
                    twiddles.push(root(j * r, len));
                }
            }
            stages.push(Stage { radix, m, stride, twiddles });
            len = m;
            stride *= radix;
        }
        let roots5 = core::array::from_fn(|k| root(k, 5));
        Ok(Self { n, stages, roots5 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward DFT: `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        assert!(scratch.len() >= self.n, "scratch buffer too short");
        let scratch = &mut scratch[..self.n];
        let mut in_data = true;
        for stage in &self.stages {
            if in_data {
                self.run_stage(stage, data, scratch);
            } else {
                self.run_stage(stage, scratch, data);
            }
            in_data = !in_data;
        }
        if !in_data {
            data.copy_from_slice(scratch);
        }
    }

    /// In-place unnormalized inverse DFT (sign `+`, no `1/n`).
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        for z in data.iter_mut() {
            *z = z.conj();
        }
        self.forward(data, scratch);
        for z in data.iter_mut() {
            *z = z.conj();
        }
    }

    fn run_stage(&self, st: &Stage, x: &[Complex64], y: &mut [Complex64]) {
        let (m, s) = (st.m, st.stride);
        let tw = &st.twiddles;
        match st.radix {
            2 => {
                for j in 0..m {
                    let w = tw[j];
                    for q in 0..s {
                        let a = x[q + s * j];
                        let b = x[q + s * (j + m)];
                        y[q + s * 2 * j] = a + b;
                        y[q + s * (2 * j + 1)] = (a - b) * w;
                    }
                }
            }
            4 => {
                for j in 0..m {
                    let (w1, w2, w3) = (tw[3 * j], tw[3 * j + 1], tw[3 * j + 2]);
                    for q in 0..s {
                        let a0 = x[q + s * j];
                        let a1 = x[q + s * (j + m)];
                        let a2 = x[q + s * (j + 2 * m)];
                        let a3 = x[q + s * (j + 3 * m)];
                        let t0 = a0 + a2;
                        let t1 = a0 - a2;
                        let t2 = a1 + a3;
                        let t3 = mul_neg_i(a1 - a3);
                        let base = q + s * 4 * j;
                        y[base] = t0 + t2;
                        y[base + s] = (t1 + t3) * w1;
                        y[base + 2 * s] = (t0 - t2) * w2;
                        y[base + 3 * s] = (t1 - t3) * w3;
                    }
                }
            }
            3 => {
                let half_sqrt3 = 0.5 * libm::sqrt(3.0);
                for j in 0..m {
                    let (w1, w2) = (tw[2 * j], tw[2 * j + 1]);
                    for q in 0..s {
                        let a0 = x[q + s * j];
                        let a1 = x[q + s * (j + m)];
                        let a2 = x[q + s * (j + 2 * m)];
                        let t = a1 + a2;
                        let d = mul_neg_i(a1 - a2) * half_sqrt3;
                        let c = a0 - t * 0.5;
                        let base = q + s * 3 * j;
                        y[base] = a0 + t;
                        y[base + s] = (c + d) * w1;
                        y[base + 2 * s] = (c - d) * w2;
                    }
                }
            }
            5 => {
                let w5 = &self.roots5;
                for j in 0..m {
                    let tw_j = &tw[4 * j..4 * j + 4];
                    for q in 0..s {
                        let a: [Complex64; 5] = core::array::from_fn(|r| x[q + s * (j + r * m)]);
                        let base = q + s * 5 * j;
                        for r in 0..5 {
                            let mut acc = a[0];
                            for (rr, &ar) in a.iter().enumerate().skip(1) {
                                acc += ar * w5[(r * rr) % 5];
                            }
                            y[base + r * s] = if r == 0 { acc } else { acc * tw_j[r - 1] };
                        }
                    }
                }
            }
            _ => unreachable!("factorize only yields radices 2, 3, 4, 5"),
        }
    }
}

/// Real-input DFT of even length `n` computed through an `n/2` complex plan.
///
/// The forward output holds the `n/2 + 1` non-negative frequencies; the
/// inverse consumes the same layout and is normalized (`inverse(forward(x)) == x`).
#[derive(Debug, Clone)]
pub struct RealFft {
    n: usize,
    half: FftPlan,
    twiddles: Vec<Complex64>,
}

/// Scratch space for one worker using a [`RealFft`].
#[derive(Debug, Clone)]
pub struct RealFftScratch {
    work: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidGrid("real transform length must be even"));
        }
        let half = FftPlan::new(n / 2)?;
        let twiddles = (0..=n / 2).map(|k| root(k, n)).collect();
        Ok(Self { n, half, twiddles })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn make_scratch(&self) -> RealFftScratch {
        let h = self.n / 2;
        RealFftScratch { work: vec![Complex64::new(0.0, 0.0); h], scratch: vec![Complex64::new(0.0, 0.0); h] }
    }

    pub fn forward(&self, input: &[f64], out: &mut [Complex64], ws: &mut RealFftScratch) {
        let h = self.n / 2;
        assert_eq!(input.len(), self.n);
        assert_eq!(out.len(), h + 1);
        for (j, z) in ws.work.iter_mut().enumerate() {
            *z = Complex64::new(input[2 * j], input[2 * j + 1]);
        }
        self.half.forward(&mut ws.work, &mut ws.scratch);
        let z = &ws.work;
        for (k, o) in out.iter_mut().enumerate() {
            let zk = z[k % h];
            let zc = z[(h - k) % h].conj();
            let even = (zk + zc) * 0.5;
            let odd = mul_neg_i(zk - zc) * 0.5;
            *o = even + self.twiddles[k] * odd;
        }
    }

    pub fn inverse(&self, input: &[Complex64], out: &mut [f64], ws: &mut RealFftScratch) {
        let h = self.n / 2;
        assert_eq!(input.len(), h + 1);
        assert_eq!(out.len(), self.n);
        for (k, w) in ws.work.iter_mut().enumerate() {
            let xk = input[k];
            let xc = input[h - k].conj();
            let even = (xk + xc) * 0.5;
            let odd = (xk - xc) * 0.5 * self.twiddles[k].conj();
            *w = even + Complex64::new(-odd.im, odd.re);
        }
        self.half.inverse(&mut ws.work, &mut ws.scratch);
        let scale = 1.0 / h as f64;
        for (j, z) in ws.work.iter().enumerate() {
            out[2 * j] = z.re * scale;
            out[2 * j + 1] = z.im * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| x.iter().enumerate().map(|(j, &v)| v * root(j * k, n)).sum())
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let t = j as f64;
                Complex64::new(libm::sin(0.37 * t) + 0.1 * t / n as f64, libm::cos(1.3 * t * t / n as f64))
            })
            .collect()
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(16), Some(vec![4, 4]));
        assert_eq!(factorize(24), Some(vec![4, 2, 3]));
        assert_eq!(factorize(7), None);
        assert_eq!(factorize(0), None);
    }

    #[test]
    fn matches_naive_dft_for_mixed_radices() {
        for n in [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 16, 30, 40, 60, 64, 90, 96, 120] {
            let x = signal(n);
            let expect = naive_dft(&x);
            let plan = FftPlan::new(n).unwrap();
            let mut got = x.clone();
            let mut scratch = vec![Complex64::new(0.0, 0.0); n];
            plan.forward(&mut got, &mut scratch);
            let scale: f64 = expect.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-12 * scale, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn inverse_undoes_forward() {
        let n = 360;
        let x = signal(n);
        let plan = FftPlan::new(n).unwrap();
        let mut y = x.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        plan.forward(&mut y, &mut scratch);
        plan.inverse(&mut y, &mut scratch);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn real_transform_matches_complex() {
        for n in [2, 4, 6, 16, 30, 48, 100, 256] {
            let x: Vec<f64> = (0..n).map(|j| libm::sin(0.3 * j as f64) + libm::cos(j as f64 * j as f64 / 7.0)).collect();
            let full = naive_dft(&x.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
            let rf = RealFft::new(n).unwrap();
            let mut ws = rf.make_scratch();
            let mut half = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
            rf.forward(&x, &mut half, &mut ws);
            for k in 0..=n / 2 {
                assert!((half[k] - full[k]).norm() < 1e-11, "n={n} k={k}");
            }
            let mut back = vec![0.0; n];
            rf.inverse(&half, &mut back, &mut ws);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_large_prime_factors() {
        assert!(FftPlan::new(14).is_err());
        assert!(RealFft::new(7).is_err());
    }
}
