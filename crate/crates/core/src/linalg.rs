//! Small dense helpers on top of `nalgebra`.
//!
//! The matrices in this crate are at most a few dozen rows, so everything is
//! plain `DMatrix<f64>`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot floor used for positive-definiteness and singularity tests.
pub const PIVOT_TOL: f64 = 1e-10;

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Cholesky factorization that fails when any pivot drops below
/// `PIVOT_TOL * max(diag)`.
pub fn cholesky_checked(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    let floor = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    cholesky_checked(m).is_ok()
}

/// Solve `a x = b` by partial-pivot LU. Returns `SingularDesign` when a pivot
/// is below the relative floor.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let scale = (0..a.nrows())
        .map(|i| a[(i, i)].abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    if (0..u.nrows()).any(|i| !(u[(i, i)].abs() > PIVOT_TOL * scale)) {
        return Err(Error::SingularDesign);
    }
    lu.solve(b).ok_or(Error::SingularDesign)
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let u = lu.u();
    let scale = (0..n)
        .map(|i| a[(i, i)].abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    if (0..n).any(|i| !(u[(i, i)].abs() > PIVOT_TOL * scale)) {
        return Err(Error::SingularDesign);
    }
    lu.try_inverse().ok_or(Error::SingularDesign)
}

/// Symmetric permutation `P m P^T` where row/column `i` of the result is
/// row/column `order[i]` of `m`.
pub fn permute_sym(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), order.len(), |i, j| m[(order[i], order[j])])
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
