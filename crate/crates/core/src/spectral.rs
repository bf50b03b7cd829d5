//! Dense symmetric spectral decomposition, spectral projectors, subspace
//! distances, singular ordering and additive symmetrization.
//!
//! Indices are 0-based throughout the library; the paper's `λ₁` is
//! `eigenvalues[0]`.

use crate::error::{Error, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A real symmetric matrix. Construction symmetrizes `(M + Mᵀ)/2`, so the
/// stored entries satisfy `a[i][j] == a[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if m.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "expected a square matrix, found {}x{}",
                n,
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Caller guarantees squareness and finiteness.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if other.n() != self.n() {
            return Err(Error::DimensionError { expected: self.n(), found: other.n() });
        }
        Ok(SymMatrix { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if other.n() != self.n() {
            return Err(Error::DimensionError { expected: self.n(), found: other.n() });
        }
        Ok(SymMatrix { m: &self.m - &other.m })
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { m: &self.m * c }
    }

    /// Operator norm `max |λ|`.
    pub fn norm(&self) -> Result<f64> {
        let vals = linalg::eigvalsh(&self.m)?;
        Ok(vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
    }
}

/// Eigenvalues in non-increasing order with matching orthonormal eigenvectors
/// stored as the columns of `eigenvectors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn u(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// Columns of the eigenvector matrix listed in `idx`, in that order.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.eigenvectors.select_columns(idx)
    }

    /// Maximum residual `‖A uᵢ − λᵢ uᵢ‖`.
    pub fn max_residual(&self, a: &SymMatrix) -> f64 {
        let au = a.as_matrix() * &self.eigenvectors;
        (0..self.n())
            .map(|i| (au.column(i) - self.eigenvectors.column(i) * self.eigenvalues[i]).norm())
            .fold(0.0, f64::max)
    }

    /// `‖UᵀU − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let n = self.n();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `Σ λᵢ uᵢuᵢᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (i, mut c) in scaled.column_iter_mut().enumerate() {
            c *= self.eigenvalues[i];
        }
        scaled * self.eigenvectors.transpose()
    }
}

/// Decompose a symmetric matrix. Eigenvalues are returned in descending order;
/// equal eigenvalues keep the solver's relative order.
pub fn decompose_symmetric(a: &SymMatrix) -> Result<Spectrum> {
    if a.as_matrix().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let (vals, vecs) = linalg::eigh(a.as_matrix())?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| vals[i]).collect(),
        eigenvectors: vecs.select_columns(&order),
    })
}

/// Eigenvalues only, descending.
pub fn eigenvalues_desc(a: &SymMatrix) -> Result<Vec<f64>> {
    let mut vals = linalg::eigvalsh(a.as_matrix())?;
    vals.reverse();
    Ok(vals)
}

/// Spectral norm of a general matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    linalg::spectral_norm(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    basis: Option<DMatrix<f64>>,
}

impl Projector {
    /// Projector onto the column span of an orthonormal `basis`.
    pub fn from_orthonormal_basis(basis: DMatrix<f64>) -> Self {
        let p = &basis * basis.transpose();
        let rank = basis.ncols();
        Self {
            matrix: SymMatrix::symmetrized(p).into_matrix(),
            rank,
            basis: Some(basis),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.basis.as_ref()
    }
}

pub(crate) fn validate_index_set(s: &[usize], n: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidSelection("index set is empty".into()));
    }
    let mut seen = vec![false; n];
    for &i in s {
        if i >= n {
            return Err(Error::InvalidSelection(format!("index {i} out of range for n = {n}")));
        }
        if seen[i] {
            return Err(Error::InvalidSelection(format!("index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// `Π_S = Σ_{i∈S} uᵢuᵢᵀ`.
pub fn spectral_projector(spec: &Spectrum, s: &[usize]) -> Result<Projector> {
    validate_index_set(s, spec.n())?;
    Ok(Projector::from_orthonormal_basis(spec.columns(s)))
}

/// `‖P − Q‖` in the operator norm.
pub fn subspace_distance(p: &Projector, q: &Projector) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimensionError { expected: p.n(), found: q.n() });
    }
    if let (Some(u), Some(v)) = (p.basis(), q.basis()) {
        if u.ncols() == v.ncols() {
            return basis_distance(u, v);
        }
    }
    let d = SymMatrix::symmetrized(&p.matrix - &q.matrix);
    Ok(floor_distance(d.norm()?))
}

/// Projector distances live in [0, 1]; anything below this is rounding noise.
pub const DISTANCE_FLOOR: f64 = 1e-12;

fn floor_distance(d: f64) -> f64 {
    if d < DISTANCE_FLOOR {
        0.0
    } else {
        d
    }
}

/// Distance between the projectors onto the spans of two orthonormal bases
/// of equal size: the sine of the largest principal angle, `‖(I − UUᵀ)V‖`.
pub fn basis_distance(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if u.nrows() != v.nrows() {
        return Err(Error::DimensionError { expected: u.nrows(), found: v.nrows() });
    }
    if u.ncols() != v.ncols() {
        return Ok(1.0);
    }
    let residual = v - u * (u.transpose() * v);
    Ok(floor_distance(operator_norm(&residual)?.min(1.0)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularOrder {
    /// `pi[k]` is the eigenvalue index holding the (k+1)-th largest |λ|.
    pub pi: Vec<usize>,
}

impl SingularOrder {
    pub fn top(&self, p: usize) -> &[usize] {
        &self.pi[..p.min(self.pi.len())]
    }
}

/// Sort indices by |λ| descending; ties go to the positive eigenvalue, then to the smaller index.
pub fn singular_order(spec: &Spectrum) -> SingularOrder {
    singular_order_values(&spec.eigenvalues)
}

pub fn singular_order_values(vals: &[f64]) -> SingularOrder {
    let mut pi: Vec<usize> = (0..vals.len()).collect();
    pi.sort_by(|&i, &j| {
        vals[j]
            .abs()
            .total_cmp(&vals[i].abs())
            .then((vals[j] > 0.0).cmp(&(vals[i] > 0.0)))
            .then(i.cmp(&j))
    });
    SingularOrder { pi }
}

/// `[[0, A], [Aᵀ, 0]]`.
pub fn symmetrize_additive(a: &DMatrix<f64>) -> Result<SymMatrix> {
    let (m, n) = a.shape();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let mut big = DMatrix::zeros(m + n, m + n);
    big.view_mut((0, m), (m, n)).copy_from(a);
    big.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    SymMatrix::new(big)
}

/// Full singular value decomposition of a rectangular matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectSpectrum {
    /// Descending, length `min(m, n)`.
    pub singular_values: Vec<f64>,
    /// m×m left singular vectors.
    pub u: DMatrix<f64>,
    /// n×n right singular vectors.
    pub v: DMatrix<f64>,
}

impl RectSpectrum {
    /// Singular value attached to left vector `l`; vectors beyond `min(m,n)` span the
    /// cokernel and carry 0.
    pub fn sigma_left(&self, l: usize) -> f64 {
        self.singular_values.get(l).copied().unwrap_or(0.0)
    }

    pub fn sigma_right(&self, l: usize) -> f64 {
        self.singular_values.get(l).copied().unwrap_or(0.0)
    }
}

pub fn decompose_rectangular(a: &DMatrix<f64>) -> Result<RectSpectrum> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let (u, s, v) = linalg::svd_full(a)?;
    Ok(RectSpectrum { singular_values: s, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_decomposition_orders_descending() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = decompose_symmetric(&a).unwrap();
        assert_eq!(s.eigenvalues, vec![3.0, 2.0, 1.0]);
        let expect = [0usize, 2, 1];
        for (k, &e) in expect.iter().enumerate() {
            assert!((s.eigenvectors[(e, k)].abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn construction_symmetrizes_exactly() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 2.0]);
        let a = SymMatrix::new(m).unwrap();
        assert_eq!(a.get(0, 1), a.get(1, 0));
        assert_eq!(a.get(0, 1), 0.2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(SymMatrix::new(DMatrix::zeros(0, 0)), Err(Error::InvalidMatrix(_))));
        assert!(matches!(SymMatrix::new(DMatrix::zeros(2, 3)), Err(Error::InvalidMatrix(_))));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(SymMatrix::new(m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn projector_of_diagonal() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = decompose_symmetric(&a).unwrap();
        let p = spectral_projector(&s, &[0]).unwrap();
        let mut e1 = DMatrix::zeros(3, 3);
        e1[(0, 0)] = 1.0;
        assert!((p.matrix - e1).abs().max() < 1e-15);
        assert!(matches!(spectral_projector(&s, &[]), Err(Error::InvalidSelection(_))));
        assert!(matches!(spectral_projector(&s, &[3]), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn distance_between_orthogonal_lines_is_one() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let p = Projector::from_orthonormal_basis(e1.clone());
        let q = Projector::from_orthonormal_basis(e2);
        assert_eq!(subspace_distance(&p, &q).unwrap(), 1.0);
        assert_eq!(subspace_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let p = Projector::from_orthonormal_basis(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let q = Projector::from_orthonormal_basis(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        assert!(matches!(subspace_distance(&p, &q), Err(Error::DimensionError { .. })));
    }

    #[test]
    fn singular_order_examples() {
        assert_eq!(singular_order_values(&[3.0, 1.0, -5.0]).pi, vec![2, 0, 1]);
        assert_eq!(singular_order_values(&[4.0, 2.0, 1.0]).pi, vec![0, 1, 2]);
        assert_eq!(singular_order_values(&[2.0, -2.0]).pi, vec![0, 1]);
        assert_eq!(singular_order_values(&[-2.0, 2.0]).pi, vec![1, 0]);
    }

    #[test]
    fn additive_symmetrization_small() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let s = symmetrize_additive(&a).unwrap();
        assert_eq!(s.as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]);
        let vals = eigenvalues_desc(&symmetrize_additive(&d).unwrap()).unwrap();
        let expect = [3.0, 2.0, -2.0, -3.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-14);
        }
    }
}
