//! Small dense linear-algebra helpers shared by the identification and
//! synthesis stages. Everything is f64 and eager; the matrices here are tiny.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Moore–Penrose pseudoinverse via SVD, truncating singular values below
/// `rank_tol * σ_max`. Returns the pseudoinverse and the numerical rank.
pub fn pseudoinverse(m: &DMatrix<f64>, rank_tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch(
            "pseudoinverse of an empty matrix".into(),
        ));
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cut = rank_tol * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    // thin SVD: U is rows×k, V_t is k×cols with k = min(rows, cols)
    let k = svd.singular_values.len();
    let mut sigma_pinv = DMatrix::zeros(k, k);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            sigma_pinv[(i, i)] = 1.0 / s;
        }
    }
    Ok((vt.transpose() * sigma_pinv * u.transpose(), rank))
}

/// Maximum real part over the eigenvalues of a (generally nonsymmetric) matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue of a symmetric matrix (input symmetrized first to shed
/// round-off skew).
pub fn sym_eig_max(m: &DMatrix<f64>) -> f64 {
    let s = symmetrize(m);
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eig_min(m: &DMatrix<f64>) -> f64 {
    let s = symmetrize(m);
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral (operator 2-) norm: largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solve the symmetric positive definite system M x = b by Cholesky.
pub fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().cholesky().map(|ch| ch.solve(b))
}
