//! Small complex linear-algebra contract used by every other module.
//!
//! Everything here works on dense `DMatrix<Complex64>`. Hermitian inputs are
//! checked against a tolerance and symmetrized as `(A + A*) / 2` before they
//! are decomposed, so callers may pass matrices that picked up rounding
//! asymmetry from products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Maximum tolerated `|A - A*|` entry, scaled by `max(1, max|A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as non-positive.
pub const PD_TOL: f64 = 1e-12;

/// `max_ij |A_ij - conj(A_ji)|`.
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Checks squareness and Hermiticity, returning the symmetrized copy.
pub fn symmetrize(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = hermitian_asymmetry(a);
    if !(asym <= HERMITIAN_TOL * max_abs(a).max(1.0)) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok((a + a.adjoint()).scale(0.5))
}

/// Real eigenvalues and eigenvectors of a Hermitian matrix, sorted by
/// descending eigenvalue. Column `i` of the returned matrix belongs to
/// eigenvalue `i`.
pub fn hermitian_eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let sym = symmetrize(a)?;
    let n = sym.nrows();
    if n == 1 {
        return Ok((vec![sym[(0, 0)].re], CMatrix::identity(1, 1)));
    }
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigvals(a: &CMatrix) -> Result<Vec<f64>> {
    let sym = symmetrize(a)?;
    if sym.nrows() == 1 {
        return Ok(vec![sym[(0, 0)].re]);
    }
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// `log2 det(A)` for Hermitian positive-definite `A`.
pub fn hermitian_logdet2(a: &CMatrix) -> Result<f64> {
    let vals = hermitian_eigvals(a)?;
    let min = vals.last().copied().unwrap_or(1.0);
    if !(min > PD_TOL) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(vals.iter().map(|v| v.log2()).sum())
}

/// Unit vector `v` minimizing `|Mv|`, together with that minimal norm.
pub fn least_singular_direction(m: &CMatrix) -> Result<(CVector, f64)> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok((CVector::from_element(1, Complex64::new(1.0, 0.0)), m[(0, 0)].norm()));
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    let v: CVector = v_t.row(idx).adjoint();
    let v = v.unscale(v.norm());
    Ok((v, sigma))
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hermitian(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let sym = symmetrize(a)?;
    if sym.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but B has {} rows",
            sym.nrows(),
            sym.ncols(),
            b.nrows()
        )));
    }
    // complex Cholesky happily takes square roots of negative pivots
    let chol = sym.clone().cholesky().filter(|ch| ch.l_dirty().diagonal().iter().all(|d| d.im == 0.0 && d.re > 0.0));
    match chol {
        Some(chol) => Ok(chol.solve(b)),
        None => {
            let min = hermitian_eigvals(&sym)?.last().copied().unwrap_or(0.0);
            Err(Error::NotPositiveDefinite { min_eigenvalue: min })
        }
    }
}

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
