//! Dense complex linear algebra used by the solvers.
//!
//! Every product that runs inside a solver goes through one of the counted
//! helpers here so that [`OpCounter`] sees the same multiplications the
//! solver actually performs. Hermitian factorizations and inverses of an
//! `n×n` matrix are charged `n³`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{count_matmul, OpCounter};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `a · b`, charged `m·k·n`.
pub fn mul(ops: &mut OpCounter, a: &CMat, b: &CMat) -> CMat {
    ops.charge(count_matmul(a.nrows(), a.ncols(), b.ncols()));
    a * b
}

/// `a · bᴴ`.
pub fn mul_adj(ops: &mut OpCounter, a: &CMat, b: &CMat) -> CMat {
    ops.charge(count_matmul(a.nrows(), a.ncols(), b.nrows()));
    a * b.adjoint()
}

/// `aᴴ · b`.
pub fn adj_mul(ops: &mut OpCounter, a: &CMat, b: &CMat) -> CMat {
    ops.charge(count_matmul(a.ncols(), a.nrows(), b.ncols()));
    a.ad_mul(b)
}

/// `(m + mᴴ) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    let mut out = m.clone();
    hermitize_mut(&mut out);
    out
}

pub fn hermitize_mut(m: &mut CMat) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn cholesky(ops: &mut OpCounter, m: &CMat, what: &'static str) -> Result<Cholesky<C64, Dyn>> {
    ops.charge(cube(m.nrows()));
    Cholesky::new(hermitize(m)).ok_or(Error::NotPositiveDefinite(what))
}

/// `log det(m)` for Hermitian positive definite `m`, as twice the sum of the
/// logs of the Cholesky diagonal.
pub fn logdet_hpd(ops: &mut OpCounter, m: &CMat, what: &'static str) -> Result<f64> {
    let chol = cholesky(ops, m, what)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc)
}

/// Inverse of a Hermitian positive definite matrix; the result is
/// re-symmetrized.
pub fn inv_hpd(ops: &mut OpCounter, m: &CMat, what: &'static str) -> Result<CMat> {
    let chol = cholesky(ops, m, what)?;
    let mut inv = chol.inverse();
    hermitize_mut(&mut inv);
    Ok(inv)
}

/// Hermitian part of `m` with eigenvalues below zero clipped to zero.
/// Returns the clipped matrix, the smallest eigenvalue and the largest
/// eigenvalue magnitude.
pub fn clip_psd(ops: &mut OpCounter, m: &CMat) -> (CMat, f64, f64) {
    let n = m.nrows();
    ops.charge(cube(n));
    let eig = SymmetricEigen::new(hermitize(m));
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    if min_eig >= 0.0 {
        return (hermitize(m), min_eig, max_abs);
    }
    let clipped = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| C64::new(l.max(0.0), 0.0)));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&clipped) * v.adjoint();
    hermitize_mut(&mut out);
    (out, min_eig, max_abs)
}

/// Eigenvalues of a Hermitian matrix (ascending order not guaranteed).
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect()
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `Re tr(aᴴ b)`, the real Frobenius inner product.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub(crate) fn cube(n: usize) -> u64 {
    let n = n as u64;
    n * n * n
}
