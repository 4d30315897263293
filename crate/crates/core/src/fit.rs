//! Small least-squares helpers used by the decay diagnostics.

use crate::error::{Error, Result};

fn check_len(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("fit inputs differ in length"));
    }
    if x.len() < min {
        return Err(Error::DegenerateFit("too few samples"));
    }
    Ok(())
}

/// Slope of `y ~ c x`.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y, 1)?;
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae are zero"));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx)
}

/// `(intercept, slope)` of `y ~ a + b x`.
pub fn affine(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_len(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// `(c1, c2)` of `y ~ c1 t + c2 t^2`.
pub fn quadratic_through_origin(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_len(t, y, 2)?;
    let (mut s2, mut s3, mut s4, mut sy1, mut sy2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let t2 = ti * ti;
        s2 += t2;
        s3 += t2 * ti;
        s4 += t2 * t2;
        sy1 += yi * ti;
        sy2 += yi * t2;
    }
    let det = s2 * s4 - s3 * s3;
    if det.abs() <= 1e-14 * s2 * s4 {
        return Err(Error::DegenerateFit("sample times do not separate t and t^2"));
    }
    Ok(((sy1 * s4 - sy2 * s3) / det, (s2 * sy2 - s3 * sy1) / det))
}

/// `||model - y||_2 / ||y||_2`.
pub fn relative_residual(model: &[f64], y: &[f64]) -> f64 {
    let num: f64 = model.iter().zip(y).map(|(m, v)| (m - v) * (m - v)).sum();
    let den: f64 = y.iter().map(|v| v * v).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        libm::sqrt(num / den)
    }
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateFit("constant sample"));
    }
    Ok(sxy / libm::sqrt(sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let t = [0.5, 1.0, 2.0, 3.0, 4.0];
        let y: alloc::vec::Vec<f64> = t.iter().map(|v| -3.0 * v + 0.5 * v * v).collect();
        let (c1, c2) = quadratic_through_origin(&t, &y).unwrap();
        assert!((c1 + 3.0).abs() < 1e-12 && (c2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn slope_and_affine() {
        assert!((slope_through_origin(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 2.0).abs() < 1e-15);
        let (a, b) = affine(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
        assert!(slope_through_origin(&[0.0], &[1.0]).is_err());
        assert!(quadratic_through_origin(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn residual_and_correlation() {
        assert_eq!(relative_residual(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap() - 1.0).abs() < 1e-2);
    }
}
