//! Small dense linear-algebra helpers shared by the estimation modules.
//!
//! Everything here operates on `nalgebra` dynamic matrices with rows as time
//! and columns as series, which keeps the regression code close to the usual
//! `Y = Z B + E` notation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot tolerance for Cholesky factorization and rank decisions.
pub const PIVOT_TOL: f64 = 1e-12;

/// Least-squares solve of `Y = Z B + E` by thin QR, returning `B` (cols(Z) x
/// cols(Y)). Fails with `SingularRegressorMatrix` when `Z` is rank deficient
/// relative to `PIVOT_TOL`.
pub fn ols_solve(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cols = z.ncols();
    let qr = z.clone().qr();
    let r = qr.r();
    let max_diag = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    let rank = (0..cols)
        .filter(|&i| r[(i, i)].abs() > PIVOT_TOL * max_diag.max(1.0))
        .count();
    if rank < cols {
        return Err(Error::SingularRegressorMatrix { rank, cols });
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or(Error::SingularRegressorMatrix { rank, cols })
}

/// Residuals of the least-squares regression of `Y` on `Z`.
pub fn ols_residuals(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let b = ols_solve(z, y)?;
    Ok(y - z * b)
}

/// Lower-triangular Cholesky factor of a symmetric matrix, with an explicit
/// pivot check so failures report which diagonal entry collapsed.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    // Tolerance relative to the diagonal scale: a well-conditioned covariance
    // factors no matter how small its overall scale; an exactly zero matrix
    // still fails (zero pivot against zero tolerance).
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0_f64, f64::max);
    let tol = PIVOT_TOL * scale;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Log-determinant of a symmetric positive-definite matrix.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    let l = cholesky_lower(m)?;
    Ok(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn inv_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cholesky_lower(m)?;
    let n = m.nrows();
    let eye = DMatrix::identity(n, n);
    let li = l
        .solve_lower_triangular(&eye)
        .ok_or(Error::SingularMomentMatrix)?;
    Ok(li.transpose() * li)
}

/// Orthonormal basis of the orthogonal complement of the column space of `m`
/// (an n x r matrix, r <= n), returned as n x (n - r). For r = 0 this is the
/// identity; for r = n it is an empty n x 0 matrix. Built by modified
/// Gram-Schmidt with one re-orthogonalization pass, seeding from unit vectors,
/// so the result depends only on the column span of `m`.
pub fn orthogonal_complement(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let r = m.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..r {
        let mut v: DVector<f64> = m.column(j).into();
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            basis.push(v / norm);
        }
    }
    let span_dim = basis.len();
    let mut complement: Vec<DVector<f64>> = Vec::with_capacity(n - span_dim);
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            let u = v / norm;
            basis.push(u.clone());
            complement.push(u);
        }
    }
    let mut out = DMatrix::zeros(n, complement.len());
    for (j, v) in complement.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Symmetric part of a matrix, used to clean up round-off before an
/// eigendecomposition.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Reindex a square matrix by `perm` on both axes: out[(i, j)] =
/// m[(perm[i], perm[j])].
pub fn permute_square(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    let n = perm.len();
    DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])])
}

/// Linear-interpolation order statistic (the common "type 7" definition):
/// for q in [0, 1], index h = q (n - 1) and the value interpolates between
/// the floor and ceiling order statistics. `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Population variance of a slice; used by tests that contrast stationary
/// and integrated series.
#[cfg(test)]
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ols_recovers_exact_coefficients() {
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b_true = DMatrix::from_row_slice(2, 1, &[0.5, -2.0]);
        let y = &z * &b_true;
        let b = ols_solve(&z, &y).unwrap();
        assert_relative_eq!(b, b_true, epsilon = 1e-12);
    }

    #[test]
    fn ols_rejects_rank_deficient_design() {
        // Second column is twice the first.
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DMatrix::zeros(3, 1);
        match ols_solve(&z, &y) {
            Err(Error::SingularRegressorMatrix { rank, cols }) => {
                assert_eq!((rank, cols), (1, 2));
            }
            other => panic!("expected SingularRegressorMatrix, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_matches_hand_factor() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky_lower(&m).unwrap();
        assert_relative_eq!(l[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(l[(1, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(l[(1, 1)], 2.0_f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(&l * l.transpose(), m, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_flags_semidefinite_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            cholesky_lower(&m),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let m = DMatrix::from_row_slice(3, 1, &[1.0, -1.0, 0.0]);
        let c = orthogonal_complement(&m);
        assert_eq!(c.shape(), (3, 2));
        let gram = c.transpose() * &c;
        assert_relative_eq!(gram, DMatrix::identity(2, 2), epsilon = 1e-10);
        let cross = m.transpose() * &c;
        assert!(cross.amax() < 1e-10);
    }

    #[test]
    fn complement_handles_degenerate_ranks() {
        let empty = DMatrix::<f64>::zeros(3, 0);
        assert_eq!(orthogonal_complement(&empty), DMatrix::identity(3, 3));
        let full = DMatrix::<f64>::identity(3, 3);
        assert_eq!(orthogonal_complement(&full).ncols(), 0);
    }

    #[test]
    fn quantile_interpolates_between_order_stats() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_relative_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_relative_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_relative_eq!(quantile_sorted(&xs, 0.25), 1.75);
    }
}
