//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Orthonormal basis of the range of `m`, discarding singular values below
/// `rel_tol` times the largest one.
pub fn orth_range(m: &CMat, rel_tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .collect();
    u.select_columns(&keep)
}

/// Orthonormal basis of the orthogonal complement in `C^n` of the span of the
/// orthonormal columns `q`.
pub fn orth_complement(q: &CMat, n: usize) -> CMat {
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    let p = CMat::identity(n, n) - matmul(q, &q.adjoint());
    let (lam, v) = hermitian_eigen(&p);
    let keep: Vec<usize> = (0..lam.len()).filter(|&i| lam[i] > 0.5).collect();
    v.select_columns(&keep)
}

fn split(m: &CMat) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: DMatrix<f64>) -> CMat {
    re.zip_map(&im, Complex64::new)
}

/// `a * b` through four real products, which run on the blocked real gemm
/// and are several times faster than the generic complex kernel.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul dimension mismatch");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    join(&ar * &br - &ai * &bi, &ar * &bi + &ai * &br)
}

/// `a^H * b`.
pub fn adjoint_mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows(), "adjoint_mul dimension mismatch");
    matmul(&a.adjoint(), b)
}

/// Spectral norm (largest singular value); zero for empty matrices.
///
/// Taken from the largest eigenvalue of the smaller Gram matrix, which is
/// accurate to rounding relative to the norm itself.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = if m.ncols() <= m.nrows() { adjoint_mul(m, m) } else { matmul(m, &m.adjoint()) };
    let g = (&g + g.adjoint()) * c(0.5);
    g.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max).max(0.0).sqrt()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Entrywise conjugate.
pub fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn conj_vec(v: &CVec) -> CVec {
    v.map(|z| z.conj())
}

/// Rank-one operator `x ⊗ y : z -> <z, y> x`.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// Toeplitz matrix `T[l][k] = coeff(l - k)` of the given size.
pub fn toeplitz(coeff: impl Fn(i64) -> Complex64, size: usize) -> CMat {
    let mut m = CMat::zeros(size, size);
    for l in 0..size {
        for k in 0..size {
            m[(l, k)] = coeff(l as i64 - k as i64);
        }
    }
    m
}

/// Least-squares solution of `a x = b` via the pseudo-inverse, dropping
/// singular values below `rel_tol` times the largest.
pub fn lstsq(a: &CMat, b: &CVec, rel_tol: f64) -> CVec {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (rel_tol * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("singular vectors requested")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_dimensions() {
        let q = orth_range(&CMat::from_fn(5, 2, |i, j| c((i * 3 + j * 7 % 5) as f64)), 1e-12);
        let p = orth_complement(&q, 5);
        assert_eq!(p.ncols(), 5 - q.ncols());
        assert!((q.adjoint() * &p).norm() < 1e-12);
        assert!((p.adjoint() * &p - CMat::identity(p.ncols(), p.ncols())).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_range() {
        let a = CVec::from_vec(vec![c(1.0), c(2.0), c(0.0)]);
        let m = outer(&a, &a);
        assert_eq!(orth_range(&m, 1e-10).ncols(), 1);
        assert!((op_norm(&m) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn split_products_match_generic_kernel() {
        let a = CMat::from_fn(7, 5, |i, j| Complex64::new((i * j) as f64 / 3.0 - 1.0, (i + 2 * j) as f64 / 7.0));
        let b = CMat::from_fn(5, 6, |i, j| Complex64::new((i + j) as f64 / 5.0, (i * 3 + j) as f64 / 11.0 - 0.5));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-13);
        assert!((adjoint_mul(&a, &a) - a.adjoint() * &a).norm() < 1e-13);
        let sv = a.clone().singular_values().iter().copied().fold(0.0, f64::max);
        assert!((op_norm(&a) - sv).abs() < 1e-13 * sv);
        assert!((op_norm(&a.adjoint()) - sv).abs() < 1e-13 * sv);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = CMat::from_fn(4, 2, |i, j| Complex64::new(i as f64 + 1.0, j as f64));
        let x = CVec::from_vec(vec![c(1.0), Complex64::new(0.0, 2.0)]);
        let b = &a * &x;
        assert!((lstsq(&a, &b, 1e-12) - x).norm() < 1e-12);
    }
}
