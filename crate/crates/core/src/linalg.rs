//! Bridge to the dense solvers in `faer`. Everything else in the crate works
//! with `nalgebra::DMatrix`; conversions happen only here.

use crate::error::{Error, Result};
use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending as returned by the solver.
pub(crate) fn eigh(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let f = to_faer(m);
    let evd = f
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, from_faer(evd.U())))
}

/// Eigenvalues only, ascending.
pub(crate) fn eigvalsh(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))
}

/// Singular values, descending.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m)
        .singular_values()
        .map_err(|e| Error::Backend(format!("{e:?}")))
}

/// Full SVD `A = U diag(s) Vᵀ` with square `U` (m×m) and `V` (n×n); `s` descending, length min(m,n).
pub(crate) fn svd_full(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let svd = to_faer(m).svd().map_err(|e| Error::Backend(format!("{e:?}")))?;
    let s = svd.S().column_vector().iter().copied().collect();
    Ok((from_faer(svd.U()), s, from_faer(svd.V())))
}

/// Largest singular value; 0 for empty input.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0).max(0.0))
}
