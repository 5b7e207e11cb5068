use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when an input is declared self-adjoint.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// A square complex matrix. Storage is column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        Self { inner: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        Self { inner: DMatrix::identity(n, n) }
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        Self::identity(n) * c
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        Self { inner: DMatrix::from_fn(n, n, |i, j| f(i, j)) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows do not form a square grid".into()));
        }
        let m = Self::from_fn(n, |i, j| rows[i][j]);
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(m)
    }

    pub fn from_nalgebra(inner: DMatrix<Complex64>) -> Self {
        assert!(inner.is_square(), "ComplexMatrix must be square");
        Self { inner }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.inner
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.inner[(i, j)] = v;
    }

    /// Entries in column-major order.
    pub fn as_slice(&self) -> &[Complex64] {
        self.inner.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        self.inner.as_mut_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    /// Matrix product through the packed complex GEMM kernel.
    pub fn matmul(&self, rhs: &Self) -> Self {
        let n = self.dim();
        assert_eq!(n, rhs.dim(), "matmul dimension mismatch");
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        let ni = n as isize;
        // SAFETY: Complex64 is repr(C) {re, im}, identical in layout to [f64; 2];
        // all three buffers hold n*n column-major elements and do not alias.
        unsafe {
            matrixmultiply::zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                n,
                n,
                n,
                [1.0, 0.0],
                self.inner.as_ptr() as *const [f64; 2],
                1,
                ni,
                rhs.inner.as_ptr() as *const [f64; 2],
                1,
                ni,
                [0.0, 0.0],
                out.as_mut_ptr() as *mut [f64; 2],
                1,
                ni,
            );
        }
        Self { inner: out }
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    /// `tr_n(X) = (1/n) Σ X_kk`.
    pub fn normalized_trace(&self) -> Complex64 {
        self.trace() / self.dim() as f64
    }

    /// `tr_n(self * rhs)` without forming the product.
    pub fn trace_of_product(&self, rhs: &Self) -> Complex64 {
        let n = self.dim();
        assert_eq!(n, rhs.dim(), "trace_of_product dimension mismatch");
        let a = self.inner.as_slice();
        let b = rhs.inner.as_slice();
        // tr(AB) = Σ_{i,k} A_ik B_ki
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            for i in 0..n {
                acc += a[i + k * n] * b[k + i * n];
            }
        }
        acc / n as f64
    }

    /// `tr_n(self^* rhs)`, the normalized Hilbert–Schmidt inner product.
    pub fn hs_inner(&self, rhs: &Self) -> Complex64 {
        assert_eq!(self.dim(), rhs.dim(), "hs_inner dimension mismatch");
        let acc: Complex64 = self
            .inner
            .iter()
            .zip(rhs.inner.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        acc / self.dim() as f64
    }

    /// `‖X‖₂² = tr_n(X^* X)`.
    pub fn hs_norm_sq(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.dim() as f64
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    /// Largest deviation `max |X_ij - conj(X_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(X + X^*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.clone();
        out += &self.adjoint();
        out * Complex64::new(0.5, 0.0)
    }

    /// Symmetrizes an input declared self-adjoint, returning the projection and
    /// the size of the correction. Fails when the defect exceeds `tol`.
    pub fn ingest_self_adjoint(&self, tol: f64) -> Result<(Self, f64)> {
        let defect = self.hermitian_defect();
        if defect > tol {
            return Err(Error::NotSelfAdjoint { deviation: defect, tolerance: tol });
        }
        Ok((self.hermitian_part(), defect))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { inner: &self.inner * Complex64::new(s, 0.0) }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex64, other: &Self) {
        self.inner.zip_apply(&other.inner, |a, b| *a += s * b);
    }

    /// `U X U^*`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Frobenius (unnormalized) norm; an upper bound for the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.inner += &rhs.inner;
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.inner -= &rhs.inner;
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<Complex64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(mut self, rhs: Complex64) -> ComplexMatrix {
        self.inner *= rhs;
        self
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * rhs }
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -self.inner }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalized_trace_examples() {
        for n in [1, 3, 7] {
            assert!((ComplexMatrix::identity(n).normalized_trace() - c(1.0, 0.0)).norm() < 1e-15);
            assert_eq!(ComplexMatrix::zeros(n).normalized_trace(), c(0.0, 0.0));
        }
        let d = ComplexMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]);
        assert!((d.normalized_trace() - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matmul_matches_naive() {
        let a = ComplexMatrix::from_fn(5, |i, j| c(i as f64 - 0.3 * j as f64, (i * j) as f64 * 0.1));
        let b = ComplexMatrix::from_fn(5, |i, j| c((i + 2 * j) as f64 * 0.2, 1.0 - i as f64));
        let naive = a.as_nalgebra() * b.as_nalgebra();
        assert!(a.matmul(&b).as_nalgebra().iter().zip(naive.iter()).all(|(x, y)| (x - y).norm() < 1e-12));
        assert!((a.trace_of_product(&b) - a.matmul(&b).normalized_trace()).norm() < 1e-12);
    }

    #[test]
    fn ingest_rejects_and_symmetrizes() {
        let mut h = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        h.set(0, 1, c(0.0, 1.0));
        h.set(1, 0, c(0.0, -1.0 + 5e-11));
        let (sym, defect) = h.ingest_self_adjoint(HERMITIAN_TOL).unwrap();
        assert!(defect > 0.0 && sym.hermitian_defect() == 0.0);
        h.set(1, 0, c(0.0, 1.0));
        assert!(matches!(h.ingest_self_adjoint(HERMITIAN_TOL), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn from_rows_validates() {
        assert!(ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![]]).is_err());
        assert!(ComplexMatrix::from_rows(&[vec![c(f64::NAN, 0.0)]]).is_err());
    }
}
