use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// A `d`-tuple of `n × n` matrices sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    mats: Vec<ComplexMatrix>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::InvalidArgument("a matrix tuple needs at least one entry".into()))?;
        let n = first.dim();
        if let Some(bad) = mats.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch(format!(
                "tuple entries have dimensions {n} and {}",
                bad.dim()
            )));
        }
        Ok(Self { mats })
    }

    pub fn single(m: ComplexMatrix) -> Self {
        Self { mats: vec![m] }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        assert!(d >= 1);
        Self { mats: (0..d).map(|_| ComplexMatrix::zeros(n)).collect() }
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.mats.len()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.mats[0].dim()
    }

    pub fn mats(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    pub fn mats_mut(&mut self) -> &mut [ComplexMatrix] {
        &mut self.mats
    }

    pub fn into_mats(self) -> Vec<ComplexMatrix> {
        self.mats
    }

    pub fn get(&self, j: usize) -> &ComplexMatrix {
        &self.mats[j]
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.d() != other.d() || self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "tuples of shape (d={}, n={}) and (d={}, n={})",
                self.d(),
                self.n(),
                other.d(),
                other.n()
            )));
        }
        Ok(())
    }

    /// `⟨X, Y⟩ = Σ_j tr_n(X_j^* Y_j)`.
    pub fn hs_inner(&self, other: &Self) -> Result<Complex64> {
        self.check_shape(other)?;
        Ok(self.mats.iter().zip(&other.mats).map(|(a, b)| a.hs_inner(b)).sum())
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.mats.iter().map(ComplexMatrix::hs_norm_sq).sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    pub fn hs_distance(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| (a - b).hs_norm_sq())
            .sum::<f64>()
            .sqrt())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        let s = Complex64::new(s, 0.0);
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            a.axpy(s, b);
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mats: self.mats.iter().map(|m| m.scale_real(s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a - b).collect() }
    }

    /// Entrywise `U X_j U^*`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self { mats: self.mats.iter().map(|m| m.conjugate_by(u)).collect() }
    }

    /// Concatenation `(X, Y)` of two tuples of the same dimension.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch("joined tuples differ in n".into()));
        }
        let mut mats = self.mats.clone();
        mats.extend(other.mats.iter().cloned());
        Ok(Self { mats })
    }

    /// Splits off the first `k` entries.
    pub fn split_at(&self, k: usize) -> (Self, Self) {
        let (a, b) = self.mats.split_at(k);
        (Self { mats: a.to_vec() }, Self { mats: b.to_vec() })
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().all(ComplexMatrix::is_finite)
    }

    pub fn max_operator_norm(&self) -> f64 {
        self.mats.iter().map(super::operator_norm).fold(0.0, f64::max)
    }
}
