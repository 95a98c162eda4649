//! Dense complex kernels shared by the rest of the crate.
//!
//! Everything here is a thin layer over `nalgebra`: hermitian eigensolves
//! with sorted output, singular values, and null-space extraction.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigendecomposition of the hermitian part of `m`, eigenvalues ascending.
///
/// Columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Eigenvalues of the hermitian part of `m`, ascending.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// Applies a real function to a hermitian matrix through its spectrum.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = eigh(m);
    let diag = CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(f(x))),
    ));
    &vectors * diag * vectors.adjoint()
}

/// Singular values sorted in decreasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the numerical null space of `m`.
///
/// A right singular vector belongs to the null space when its singular value
/// is at most `rel_tol` times the largest one (absolute `rel_tol` if `m` is zero).
pub fn null_space(m: &CMat, rel_tol: f64) -> Vec<CVec> {
    let cols = m.ncols();
    // Pad to at least square so the thin SVD exposes every right singular vector.
    let padded = if m.nrows() < cols {
        let mut p = CMat::zeros(cols, cols);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = if s_max > 0.0 { rel_tol * s_max } else { rel_tol };
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `a · b`, routed through four real products above a small size, where the
/// optimised real kernel is much faster than the generic complex loop.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    const SPLIT_MIN: usize = 24;
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_MIN {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}
