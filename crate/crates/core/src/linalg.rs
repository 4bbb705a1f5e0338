//! Small dense complex-matrix helpers shared by the solvers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(r: usize) -> CMat {
    CMat::identity(r, r)
}

pub fn zeros(r: usize) -> CMat {
    CMat::zeros(r, r)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s
}

pub fn min_singular(a: &CMat) -> f64 {
    singular_values(a).first().cloned().unwrap_or(0.0)
}

/// Frobenius norm of the anti-Hermitian part `(A - A*)/2`.
pub fn antihermitian_norm(a: &CMat) -> f64 {
    frobenius(&((a - a.adjoint()) * C64::new(0.5, 0.0)))
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Relative symmetry test `‖A − A*‖ ≤ tol·(1 + ‖A‖)` in the Frobenius norm.
pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && frobenius(&(a - a.adjoint())) <= tol * (1.0 + frobenius(a))
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, eigenvectors in columns.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(a))
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Number of eigenvalues of a Hermitian PSD matrix above `rel_tol·‖A‖`.
pub fn numerical_rank(a: &CMat, rel_tol: f64) -> usize {
    let ev = hermitian_eigenvalues(a);
    let scale = ev.iter().cloned().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    ev.iter().filter(|&&v| v > rel_tol * scale).count()
}

/// Hermitize and clamp negative eigenvalues to zero.
pub fn psd_clip(a: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(v.max(0.0), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

pub fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}
