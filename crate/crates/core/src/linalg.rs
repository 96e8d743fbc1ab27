//! Small dense linear-algebra helpers shared by the modules.

use alloc::vec::Vec;
use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Condition number above which a symmetric positive-definite matrix is
/// treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Largest entry of `|m - mᵀ|` relative to the largest entry of `|m|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() / scale
}

/// Inverts a symmetric positive-definite matrix, rejecting indefinite and
/// ill-conditioned input.
pub fn spd_inverse(m: &Matrix, what: &'static str) -> Result<Matrix> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let ev = sym_eigenvalues(m);
    let lo = ev[0];
    let hi = ev[n - 1];
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(Error::DomainError(alloc::format!(
            "{what} is not positive definite (smallest eigenvalue {lo:e})"
        )));
    }
    let condition = hi / lo;
    if condition > MAX_CONDITION {
        return Err(Error::SingularMetric { what, condition });
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::SingularMetric {
        what,
        condition: f64::INFINITY,
    })?;
    let inv = chol.inverse();
    // symmetrize away rounding
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Numerical rank of `m` with the singular values that produced it.
///
/// A singular value counts when it exceeds `rel_tol · σ_max · max(rows, cols)`.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> (usize, Vec<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, Vec::new());
    }
    let sv = m.clone().singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return (0, s);
    }
    let thresh = rel_tol * smax * (m.nrows().max(m.ncols()) as f64);
    let rank = s.iter().filter(|&&x| x > thresh).count();
    (rank, s)
}

/// Central finite-difference step for coordinate value `x`.
#[inline]
pub fn fd_step(rel: f64, x: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Jacobian of `f: ℝⁿ → ℝᵐ` at `x` by central differences.
pub fn fd_jacobian<F>(f: F, x: &Vector, rel: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let n = x.len();
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..n {
        let h = fd_step(rel, x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
    }
    let m = cols.first().map(|c| c.len()).unwrap_or(0);
    let mut jac = Matrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        jac.set_column(j, c);
    }
    Ok(jac)
}

/// `[B, AB, …, A^{n-1}B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let d = b.ncols();
    let mut out = Matrix::zeros(n, n * d);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * d), (n, d)).copy_from(&blk);
        blk = a * blk;
    }
    out
}

/// Solves `m x = rhs` by SVD pseudo-inverse (minimum-norm least squares).
pub fn lstsq(m: &Matrix, rhs: &Vector) -> Vector {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-13 * smax.max(f64::MIN_POSITIVE) * (m.nrows().max(m.ncols()) as f64);
    svd.solve(rhs, eps).unwrap_or_else(|_| Vector::zeros(m.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_hand_cases() {
        let a = Matrix::identity(2, 2);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let (r, _) = numerical_rank(&controllability_matrix(&a, &b), 1e-10);
        assert_eq!(r, 1);
        let a0 = Matrix::zeros(3, 3);
        let (r, s) = numerical_rank(&controllability_matrix(&a0, &Matrix::identity(3, 3)), 1e-10);
        assert_eq!(r, 3);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn spd_inverse_rejects_indefinite_and_ill_conditioned() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(spd_inverse(&m, "G"), Err(Error::DomainError(_))));
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-15]);
        assert!(matches!(spd_inverse(&m, "G"), Err(Error::SingularMetric { .. })));
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = spd_inverse(&m, "G").unwrap();
        assert!((&m * inv - Matrix::identity(2, 2)).amax() < 1e-14);
    }
}
