//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scaled_eye(n: usize, s: f64) -> CMat {
    CMat::from_diagonal_element(n, n, c(s, 0.0))
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real part of the trace.
pub fn tr_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `Re Tr(a^H b)`, the real inner product used for gradients.
pub fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn fro2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn fro(m: &CMat) -> f64 {
    fro2(m).sqrt()
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `(m + m^T) / 2`.
pub fn symmetric_part(m: &CMat) -> CMat {
    (m + m.transpose()).scale(0.5)
}

/// Cholesky factor of a Hermitian positive-definite matrix. The input is
/// Hermitised first so tiny rounding asymmetries do not matter.
pub fn chol(m: &CMat) -> Result<Cholesky<Complex64, Dyn>> {
    let not_pd = || Error::Numeric("matrix is not positive definite".into());
    let ch = Cholesky::new(hermitian_part(m)).ok_or_else(not_pd)?;
    // Complex square roots never fail, so a negative pivot shows up as an
    // imaginary diagonal entry of the factor.
    let ok = ch
        .l_dirty()
        .diagonal()
        .iter()
        .all(|z| z.re > 0.0 && z.re.is_finite() && z.im.abs() <= 1e-12 * z.re);
    if ok {
        Ok(ch)
    } else {
        Err(not_pd())
    }
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse(m: &CMat) -> Result<CMat> {
    let ch = chol(m)?;
    Ok(hermitian_part(&ch.inverse()))
}

/// `log|m|` (natural log) of a Hermitian positive-definite matrix.
pub fn hpd_logdet(m: &CMat) -> Result<f64> {
    let ch = chol(m)?;
    Ok(ch.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    herm_eig(m).0.first().copied().unwrap_or(0.0)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    let gram = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    herm_eig(&gram).0.last().map_or(0.0, |&l| l.max(0.0).sqrt())
}

/// Stacks the columns of a diagonal into a square matrix.
pub fn diag(v: &[Complex64]) -> CMat {
    let n = v.len();
    let mut m = zeros(n, n);
    for (i, &z) in v.iter().enumerate() {
        m[(i, i)] = z;
    }
    m
}

pub fn diagonal_of(m: &CMat) -> Vec<Complex64> {
    m.diagonal().iter().copied().collect()
}

/// Largest absolute off-diagonal entry.
pub fn max_offdiag(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
