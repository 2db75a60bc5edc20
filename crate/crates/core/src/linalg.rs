//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Induced infinity norm: max absolute row sum.
pub fn inf_norm(m: &Mat) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &Mat) -> f64 {
    m.norm()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

pub fn require_symmetric(m: &Mat) -> Result<()> {
    if !is_symmetric(m, 1e-12) {
        return Err(Error::InvalidCertificate("matrix is not symmetric".into()));
    }
    Ok(())
}

pub fn sym_part(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(sym_part(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn lambda_min(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sqrtm_psd(m: &Mat) -> Mat {
    let eig = SymmetricEigen::new(sym_part(m));
    let d = Mat::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn expm(m: &Mat) -> Mat {
    m.exp()
}

/// Largest eigenvalue of the pencil (A, P) for SPD P, i.e. max over d of dᵀAd / dᵀPd.
pub fn generalized_lambda_max(a: &Mat, p: &Mat) -> f64 {
    let l = p.clone().cholesky().expect("P must be positive definite");
    let linv = l.l().try_inverse().expect("invertible cholesky factor");
    lambda_max(&(&linv * sym_part(a) * linv.transpose()))
}
