//! Gaussian ensembles and Haar unitaries, normalized so that `tr_n` moments
//! have `n`-independent limits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, MatrixTuple};

/// Domain of a matrix variable: all of `M_n(C)` or the self-adjoint part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatrixDomain {
    #[default]
    General,
    SelfAdjoint,
}

impl MatrixDomain {
    /// Real dimension of `n × n` matrices in this domain.
    pub fn real_dim(self, n: usize) -> usize {
        match self {
            MatrixDomain::General => 2 * n * n,
            MatrixDomain::SelfAdjoint => n * n,
        }
    }

    /// Exponent of `log n` in the free-entropy normalization, per variable.
    pub fn log_n_weight(self) -> f64 {
        match self {
            MatrixDomain::General => 2.0,
            MatrixDomain::SelfAdjoint => 1.0,
        }
    }
}

#[inline]
fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Ginibre matrix: i.i.d. entries with `E|Z_ij|² = 1/n`.
pub fn ginibre_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let s = (0.5 / n as f64).sqrt();
    // column-major fill keeps the draw order stable
    let inner = DMatrix::from_fn(n, n, |_, _| Complex64::new(s * gauss(rng), s * gauss(rng)));
    ComplexMatrix::from_nalgebra(inner)
}

pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> MatrixTuple {
    assert!(n >= 1 && d >= 1, "sample_ginibre needs n, d >= 1");
    MatrixTuple::new((0..d).map(|_| ginibre_matrix(n, rng)).collect()).expect("uniform dimension")
}

/// GUE matrix normalized so that its spectrum fills `[-2, 2]`.
pub fn sample_gue<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "sample_gue needs n >= 1");
    let diag_sd = (1.0 / n as f64).sqrt();
    let off_sd = (0.5 / n as f64).sqrt();
    let mut m = ComplexMatrix::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                m.set(i, i, Complex64::new(diag_sd * gauss(rng), 0.0));
            } else {
                let z = Complex64::new(off_sd * gauss(rng), off_sd * gauss(rng));
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
    }
    m
}

/// Haar unitary from the QR factorization of a Ginibre matrix, with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "sample_haar_unitary needs n >= 1");
    let z = ginibre_matrix(n, rng).into_nalgebra();
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(q)
}

/// Gaussian draw in the orthonormal coordinates of the normalized
/// Hilbert–Schmidt inner product, each real coordinate with variance
/// `scale² / real_dim(n)`, so that `E ‖X‖₂² = scale²`.
///
/// Returns the matrix together with `‖X‖₂²`, the squared coordinate norm.
pub fn sample_coordinate_gaussian<R: Rng + ?Sized>(
    n: usize,
    domain: MatrixDomain,
    scale: f64,
    rng: &mut R,
) -> (ComplexMatrix, f64) {
    let m = match domain {
        MatrixDomain::General => ginibre_matrix(n, rng),
        MatrixDomain::SelfAdjoint => sample_gue(n, rng),
    }
    .scale_real(scale);
    let norm_sq = m.hs_norm_sq();
    (m, norm_sq)
}

/// Log-density of [`sample_coordinate_gaussian`] at a point whose squared
/// coordinate norm is `norm_sq`.
pub fn coordinate_gaussian_log_density(n: usize, domain: MatrixDomain, scale: f64, norm_sq: f64) -> f64 {
    let dim = domain.real_dim(n) as f64;
    let var = scale * scale / dim;
    -norm_sq / (2.0 * var) - 0.5 * dim * (2.0 * std::f64::consts::PI * var).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{operator_norm, RngStream};

    #[test]
    fn ginibre_is_deterministic() {
        let a = sample_ginibre(6, 2, &mut RngStream::new(11, 5).rng());
        let b = sample_ginibre(6, 2, &mut RngStream::new(11, 5).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn gue_is_exactly_self_adjoint() {
        let x = sample_gue(17, &mut RngStream::new(1, 0).rng());
        assert_eq!(x.hermitian_defect(), 0.0);
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let u = sample_haar_unitary(32, &mut RngStream::new(3, 9).rng());
        let resid = &u.matmul(&u.adjoint()) - &ComplexMatrix::identity(32);
        assert!(operator_norm(&resid) < 1e-10);
        assert_eq!(u, sample_haar_unitary(32, &mut RngStream::new(3, 9).rng()));
    }

    #[test]
    fn coordinate_gaussian_variance_matches_scale() {
        let mut rng = RngStream::new(2, 2).rng();
        for domain in [MatrixDomain::General, MatrixDomain::SelfAdjoint] {
            let mean: f64 = (0..200)
                .map(|_| sample_coordinate_gaussian(6, domain, 1.5, &mut rng).1)
                .sum::<f64>()
                / 200.0;
            assert!((mean - 2.25).abs() < 0.1, "{domain:?}: {mean}");
        }
    }
}
