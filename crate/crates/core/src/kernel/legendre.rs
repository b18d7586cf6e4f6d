//! Legendre polynomials, Clenshaw summation and real spherical harmonics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

fn check_domain(t: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("t = {t} outside [-1, 1]")))
    }
}

/// `P_l(t)` by the three-term recurrence.
pub fn legendre_eval(l: usize, t: f64) -> Result<f64> {
    check_domain(t)?;
    let (mut p0, mut p1) = (1.0, t);
    if l == 0 {
        return Ok(p0);
    }
    for k in 1..l {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// `P_0(t), ..., P_lmax(t)`.
pub fn legendre_all(lmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(t);
    }
    for k in 1..lmax {
        let p2 = ((2 * k + 1) as f64 * t * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
        out.push(p2);
    }
    out
}

/// `sum_l c_l P_l(t)` by Clenshaw's backward recurrence. No domain check.
pub fn clenshaw_legendre(coefficients: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for k in (0..coefficients.len()).rev() {
        let alpha = (2 * k + 1) as f64 * t / (k + 1) as f64;
        let beta = -((k + 1) as f64) / (k + 2) as f64;
        let b0 = coefficients[k] + alpha * b1 + beta * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// Number of real spherical harmonics of degree at most `degree`.
pub fn harmonic_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Orthonormal real spherical harmonics of degree `<= degree` at `p`,
/// ordered by degree, then `m = 0, 1, -1, 2, -2, ...`.
pub fn real_harmonics(degree: usize, p: &SpherePoint) -> Vec<f64> {
    let ct = p.z.clamp(-1.0, 1.0);
    let st = (p.x * p.x + p.y * p.y).sqrt();
    let phi = p.y.atan2(p.x);
    // pbar[l][m]: fully normalized associated Legendre functions.
    let mut pbar = vec![vec![0.0; degree + 1]; degree + 1];
    pbar[0][0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=degree {
        pbar[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * st * pbar[m - 1][m - 1];
    }
    for m in 0..degree {
        pbar[m + 1][m] = ((2 * m + 3) as f64).sqrt() * ct * pbar[m][m];
    }
    // Three-term recurrence in l for each order m.
    #[allow(clippy::needless_range_loop)]
    for m in 0..=degree {
        for l in (m + 2)..=degree {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            pbar[l][m] = a * (ct * pbar[l - 1][m] - b * pbar[l - 2][m]);
        }
    }
    let mut out = Vec::with_capacity(harmonic_count(degree));
    let s2 = std::f64::consts::SQRT_2;
    for (l, row) in pbar.iter().enumerate() {
        out.push(row[0]);
        for (m, &value) in row.iter().enumerate().take(l + 1).skip(1) {
            let (s, c) = (m as f64 * phi).sin_cos();
            out.push(s2 * value * c);
            out.push(s2 * value * s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(legendre_eval(0, 0.37).unwrap(), 1.0);
        assert_eq!(legendre_eval(1, 0.3).unwrap(), 0.3);
        assert_abs_diff_eq!(legendre_eval(5, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(legendre_eval(2, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_forms() {
        let t = 0.41;
        assert_abs_diff_eq!(legendre_eval(2, t).unwrap(), 0.5 * (3.0 * t * t - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(
            legendre_eval(3, t).unwrap(),
            0.5 * (5.0 * t.powi(3) - 3.0 * t),
            epsilon = 1e-15
        );
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let c: Vec<f64> = (0..40).map(|l| 1.0 / (1.0 + l as f64).powi(2)).collect();
        for &t in &[-1.0, -0.3, 0.0, 0.77, 1.0] {
            let p = legendre_all(39, t);
            let direct: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(clenshaw_legendre(&c, t), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn low_degree_harmonics() {
        let p = SpherePoint::new(0.3, -0.4, 0.5).unwrap();
        let y = real_harmonics(1, &p);
        let c0 = 1.0 / (4.0 * PI).sqrt();
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert_abs_diff_eq!(y[0], c0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], c1 * p.z, epsilon = 1e-15);
        assert_abs_diff_eq!(y[2], c1 * p.x, epsilon = 1e-15);
        assert_abs_diff_eq!(y[3], c1 * p.y, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn bounded_by_one(l in 0usize..200, t in -1.0..=1.0f64) {
            prop_assert!(legendre_eval(l, t).unwrap().abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn zonal_harmonic_is_legendre(l in 0usize..12, theta in 0.0..PI) {
            let p = SpherePoint::from_spherical(theta, 0.3);
            let y = real_harmonics(l, &p);
            let expected = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre_eval(l, theta.cos()).unwrap();
            prop_assert!((y[l * l] - expected).abs() < 1e-12);
        }
    }
}
