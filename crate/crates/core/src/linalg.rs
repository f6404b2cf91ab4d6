//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64 { re: 0.0, im: 1.0 };

pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// `v v^H`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `Tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn frob_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `a^H X a`, real part only (exact for Hermitian `X`).
pub fn quad_form(a: &CVec, x: &CMat) -> f64 {
    (a.adjoint() * x * a)[(0, 0)].re
}

pub fn max_hermitian_defect(a: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Ties are broken toward the larger original index so the ordering is
/// deterministic for degenerate spectra.
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn herm_eigen(a: &CMat) -> HermEigen {
    let n = a.nrows();
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(j.cmp(&i))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermEigen { values, vectors }
}

pub fn spectral_norm_herm(a: &CMat) -> f64 {
    herm_eigen(a).values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn nuclear_norm_herm(a: &CMat) -> f64 {
    herm_eigen(a).values.iter().map(|v| v.abs()).sum()
}

/// Checks `X ⪰ 0` with eigenvalues allowed down to `-tol·‖X‖₂`.
pub fn check_psd(a: &CMat, rel_tol: f64, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims(format!("{what} is not square")));
    }
    if a.nrows() == 0 {
        return Ok(());
    }
    let values = herm_eigen(a).values;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = *values.last().unwrap();
    if min < -rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalDomain(format!(
            "{what} is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

pub fn same_square(a: &CMat, b: &CMat, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(Error::dims(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
