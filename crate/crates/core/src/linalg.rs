//! Small dense-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 300;
const POWER_TOLERANCE: f64 = 1e-10;

/// Maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute column sum.
pub fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Replaces `m` with `(m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest `|x^T M x|` direction by power iteration: the spectral norm of a
/// symmetric matrix. The result is a lower estimate that is accurate to
/// roughly `POWER_TOLERANCE` relative unless the top eigenvalues nearly tie.
pub fn symmetric_norm2(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * (i as f64 * 0.7).sin());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let done = (norm - estimate).abs() <= POWER_TOLERANCE * norm;
        estimate = norm;
        v = w / norm;
        if done {
            break;
        }
    }
    estimate
}

/// Below this size triangular inverses use plain substitution.
const TRIANGULAR_BLOCK: usize = 96;

/// Inverse of a lower triangular matrix by recursive 2x2 blocking, so most
/// of the work is matrix products:
/// `[[L11, 0], [L21, L22]]^-1 = [[X11, 0], [-X22 L21 X11, X22]]`.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    if n <= TRIANGULAR_BLOCK {
        return l.solve_lower_triangular(&DMatrix::identity(n, n));
    }
    let h = n / 2;
    let x11 = lower_triangular_inverse(&l.view((0, 0), (h, h)).into_owned())?;
    let x22 = lower_triangular_inverse(&l.view((h, h), (n - h, n - h)).into_owned())?;
    let x21 = -(&x22 * (l.view((h, 0), (n - h, h)) * &x11));
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (h, h)).copy_from(&x11);
    out.view_mut((h, h), (n - h, n - h)).copy_from(&x22);
    out.view_mut((h, 0), (n - h, h)).copy_from(&x21);
    Some(out)
}

/// Inverse of a symmetric positive definite matrix, `L^-T L^-1`; `None`
/// when the Cholesky factorization fails.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = m.clone().cholesky()?.unpack();
    let x = lower_triangular_inverse(&l)?;
    Some(x.transpose() * x)
}

/// Inverse of a general square matrix via LU.
pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Numerical rank from singular values above `rel_tol * sigma_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.iter().fold(0.0, |a: f64, s| a.max(*s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(inf_norm(&m), 7.0);
        assert_eq!(one_norm(&m), 6.0);
        assert_eq!(max_abs(&m), 4.0);
    }

    #[test]
    fn spectral_norm_of_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_abs_diff_eq!(symmetric_norm2(&m), 3.0, epsilon = 1e-8);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -5.0, 2.0]));
        assert_abs_diff_eq!(symmetric_norm2(&d), 5.0, epsilon = 1e-8);
    }

    #[test]
    fn spd_inverse_matches_lu() {
        let n = 300;
        let m = DMatrix::from_fn(n, n, |i, j| (-((i as f64 - j as f64) / 7.0).powi(2)).exp())
            + DMatrix::identity(n, n);
        let a = spd_inverse(&m).unwrap();
        let b = inverse(&m).unwrap();
        assert!(max_abs(&(a - b)) < 1e-10);
        assert!(spd_inverse(&(-DMatrix::<f64>::identity(3, 3))).is_none());
    }

    #[test]
    fn rank_of_deficient() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(rank(&m, 1e-10), 1);
    }

    #[test]
    fn inverse_and_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = inverse(&m).unwrap();
        assert_abs_diff_eq!(inv[(0, 1)], -1.0 / 3.0, epsilon = 1e-15);
        let ev = symmetric_eigenvalues(&m);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-14);
        assert!(inverse(&DMatrix::zeros(2, 2)).is_err());
    }
}
