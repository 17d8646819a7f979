//! Small dense linear-algebra helpers shared by the statistical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the matching vectors.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Inverse through a Cholesky factorization; fails on non-PD input.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite)
}

/// `ln |m|` for a symmetric positive-definite matrix, `None` otherwise.
pub fn spd_log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Symmetric square root `V diag(sqrt(max(e, 0))) Vᵀ`; errors when an
/// eigenvalue is below `-tol`.
pub fn sym_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen_desc(m);
    if vals.iter().any(|&e| e < -tol) {
        return Err(Error::NotPositiveDefinite);
    }
    let d = DMatrix::from_diagonal(&vals.map(|e| e.max(0.0).sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// Row/column index pairs `(i, j)` with `i >= j`, column-major lower triangle.
/// This is the ordering used for every half-vectorized quantity in the crate.
pub fn vech_indices(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        for i in j..p {
            out.push((i, j));
        }
    }
    out
}

pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let idx = vech_indices(m.nrows());
    DVector::from_iterator(idx.len(), idx.iter().map(|&(i, j)| m[(i, j)]))
}

/// Submatrix on the given rows and columns (same index list for both).
pub fn principal_submatrix(m: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])])
}

pub fn max_abs_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let (vals, vecs) = sym_eigen_desc(&m);
        assert!((vals[0] - 1.6).abs() < 1e-12);
        assert!((vals[1] - 0.4).abs() < 1e-12);
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((recon - m).abs().max() < 1e-12);
    }

    #[test]
    fn log_det_matches_closed_form() {
        // equicorrelation r = 0.5, p = 3: |R| = (1 - r)^2 (1 + 2r) = 0.5
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.5 });
        assert!((spd_log_det(&m).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        let singular = DMatrix::from_element(2, 2, 1.0);
        assert!(spd_log_det(&singular).is_none());
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let s = sym_sqrt(&m, 1e-12).unwrap();
        assert!((&s * &s - m).abs().max() < 1e-12);
    }

    #[test]
    fn vech_order() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(vech(&m).as_slice(), &[1.0, 2.0, 4.0]);
    }
}
