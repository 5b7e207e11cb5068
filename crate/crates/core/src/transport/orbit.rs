//! Distance between unitary orbits.

use rand::Rng;
use serde::Serialize;

use super::measure::{wasserstein_spectral, SpectralMeasure};
use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, Complex64, ComplexMatrix, MatrixTuple, HERMITIAN_TOL};
use crate::optimize::{minimize_over_unitaries, OptConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitDistance {
    /// `inf_U ‖U X U^* − Y‖₂` as found by the optimizer (an upper bound).
    pub value: f64,
    #[serde(skip)]
    pub witness: ComplexMatrix,
    pub converged: bool,
    pub iters_used: usize,
}

/// `Σ_j ‖U X_j U^* − Y_j‖₂²` with gradient `2 Σ_j (R_j U X_j^* + R_j^* U X_j)`.
fn orbit_value_grad(x: &MatrixTuple, y: &MatrixTuple, u: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let n = u.dim();
    let uh = u.adjoint();
    let mut value = 0.0;
    let mut grad = ComplexMatrix::zeros(n);
    for (xj, yj) in x.mats().iter().zip(y.mats()) {
        let ux = u.matmul(xj);
        let r = &ux.matmul(&uh) - yj;
        value += r.hs_norm_sq();
        grad += &r.matmul(u).matmul(&xj.adjoint());
        grad += &r.adjoint().matmul(&ux);
    }
    (value, grad.scale_real(2.0))
}

/// Self-adjoint combination `Σ α_j Re X_j + β_j Im X_j`.
fn hermitian_mix(x: &MatrixTuple, coeffs: &[(f64, f64)]) -> ComplexMatrix {
    let n = x.n();
    let mut out = ComplexMatrix::zeros(n);
    for (m, &(a, b)) in x.mats().iter().zip(coeffs) {
        let re = m.hermitian_part();
        // Im X = (X − X^*) / 2i
        let mut im = m.clone();
        im -= &m.adjoint();
        let im = &im * Complex64::new(0.0, -0.5);
        out.axpy(Complex64::new(a, 0.0), &re);
        out.axpy(Complex64::new(b, 0.0), &im);
    }
    out.hermitian_part()
}

/// Start that maps the sorted eigenbasis of a generic self-adjoint
/// combination of `X` onto that of `Y`, with eigenvector phases matched on
/// the largest entries. Exact when `Y` is a unitary conjugate of `X` with a
/// simple spectrum of the combination.
fn spectral_start(x: &MatrixTuple, y: &MatrixTuple, cfg: &OptConfig) -> Result<ComplexMatrix> {
    let mut rng = cfg.seed.child(u64::MAX).rng();
    let coeffs: Vec<(f64, f64)> =
        (0..x.d()).map(|_| (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5))).collect();
    let (_, vx) = hermitian_eigen(&hermitian_mix(x, &coeffs))?;
    let (_, vy) = hermitian_eigen(&hermitian_mix(y, &coeffs))?;
    let n = x.n();
    let bx: Vec<ComplexMatrix> = x.mats().iter().map(|m| vx.adjoint().matmul(m).matmul(&vx)).collect();
    let by: Vec<ComplexMatrix> = y.mats().iter().map(|m| vy.adjoint().matmul(m).matmul(&vy)).collect();
    // phases d with d_i conj(d_j) Bx_ij = By_ij, grown greedily along strong entries
    let mut phase: Vec<Option<Complex64>> = vec![None; n];
    phase[0] = Some(Complex64::new(1.0, 0.0));
    for _ in 1..n {
        let mut best: Option<(f64, usize, Complex64)> = None;
        for i in (0..n).filter(|&i| phase[i].is_some()) {
            for j in (0..n).filter(|&j| phase[j].is_none()) {
                for (a, b) in bx.iter().zip(&by) {
                    let (bxij, byij) = (a.get(i, j), b.get(i, j));
                    let weight = bxij.norm().min(byij.norm());
                    if weight > best.map_or(0.0, |b| b.0) {
                        let dj = (byij / (phase[i].unwrap() * bxij)).conj();
                        best = Some((weight, j, dj / dj.norm()));
                    }
                }
            }
        }
        match best {
            Some((_, j, dj)) => phase[j] = Some(dj),
            None => {
                for p in phase.iter_mut().filter(|p| p.is_none()) {
                    *p = Some(Complex64::new(1.0, 0.0));
                }
                break;
            }
        }
    }
    let mut vyd = vy.clone();
    for (j, p) in phase.iter().enumerate() {
        let p = p.unwrap();
        for i in 0..n {
            vyd.set(i, j, vyd.get(i, j) * p);
        }
    }
    Ok(vyd.matmul(&vx.adjoint()))
}

fn check_pair(x: &MatrixTuple, y: &MatrixTuple) -> Result<()> {
    if x.n() != y.n() || x.d() != y.d() {
        return Err(Error::DimensionMismatch(format!(
            "tuples of shape ({}, {}) and ({}, {})",
            x.n(),
            x.d(),
            y.n(),
            y.d()
        )));
    }
    Ok(())
}

/// `ψ(X, Y) = inf_U ‖U X U^* − Y‖₂` over the unitary group, by Riemannian
/// descent from the identity, Haar draws and a spectral-alignment start.
pub fn psi_distance(x: &MatrixTuple, y: &MatrixTuple, cfg: &OptConfig) -> Result<OrbitDistance> {
    check_pair(x, y)?;
    let obj = |u: &ComplexMatrix| -> Result<(f64, ComplexMatrix)> { Ok(orbit_value_grad(x, y, u)) };
    let extra = spectral_start(x, y, cfg)?;
    let res = minimize_over_unitaries(&obj, x.n(), cfg, &[extra])?;
    let witness = res.witness.get(0).clone();
    Ok(OrbitDistance { value: res.value.max(0.0).sqrt(), witness, converged: res.converged, iters_used: res.iters_used })
}

/// [`psi_distance`] without the spectral start, for testing the optimizer
/// alone.
pub fn psi_distance_plain(x: &MatrixTuple, y: &MatrixTuple, cfg: &OptConfig) -> Result<OrbitDistance> {
    check_pair(x, y)?;
    let obj = |u: &ComplexMatrix| -> Result<(f64, ComplexMatrix)> { Ok(orbit_value_grad(x, y, u)) };
    let res = minimize_over_unitaries(&obj, x.n(), cfg, &[])?;
    let witness = res.witness.get(0).clone();
    Ok(OrbitDistance { value: res.value.max(0.0).sqrt(), witness, converged: res.converged, iters_used: res.iters_used })
}

/// Orbit distance of two self-adjoint matrices, which equals the spectral
/// `W₂` distance of their eigenvalue distributions.
pub fn wasserstein_matrix(x: &ComplexMatrix, y: &ComplexMatrix, cfg: &OptConfig) -> Result<OrbitDistance> {
    for m in [x, y] {
        let defect = m.hermitian_defect();
        let tol = HERMITIAN_TOL.max(1e-10 * m.frobenius_norm());
        if defect > tol {
            return Err(Error::NotSelfAdjoint { deviation: defect, tolerance: tol });
        }
    }
    psi_distance(&MatrixTuple::single(x.clone()), &MatrixTuple::single(y.clone()), cfg)
}

/// `W₂` of the two empirical spectral measures; the oracle for
/// [`wasserstein_matrix`].
pub fn spectral_oracle(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
    wasserstein_spectral(&SpectralMeasure::from_matrix(x)?, &SpectralMeasure::from_matrix(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_ginibre, sample_gue, sample_haar_unitary, RngStream};

    #[test]
    fn self_and_conjugate_pairs() {
        let cfg = OptConfig::default();
        let mut rng = RngStream::new(8, 1).rng();
        let x = sample_ginibre(6, 2, &mut rng);
        assert!(psi_distance(&x, &x, &cfg).unwrap().value < 1e-8);
        let v = sample_haar_unitary(6, &mut rng);
        let y = x.conjugate_by(&v);
        assert!(psi_distance(&x, &y, &cfg).unwrap().value < 1e-6);
    }

    #[test]
    fn matches_spectral_oracle() {
        let cfg = OptConfig::default();
        let mut rng = RngStream::new(8, 2).rng();
        for n in [2, 5, 16] {
            let x = sample_gue(n, &mut rng);
            let y = sample_gue(n, &mut rng);
            let got = wasserstein_matrix(&x, &y, &cfg).unwrap().value;
            let oracle = spectral_oracle(&x, &y).unwrap();
            assert!((got - oracle).abs() < 1e-6, "n={n}: {got} vs {oracle}");
        }
        let x = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let y = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        assert!((wasserstein_matrix(&x, &y, &cfg).unwrap().value - 1.0).abs() < 1e-8);
        let g = sample_ginibre(3, 1, &mut rng);
        assert!(wasserstein_matrix(g.get(0), g.get(0), &cfg).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(8, 3).rng();
        let x = sample_ginibre(4, 2, &mut rng);
        let y = sample_ginibre(4, 2, &mut rng);
        let u = sample_haar_unitary(4, &mut rng);
        let h = sample_ginibre(4, 1, &mut rng).into_mats().remove(0);
        let (_, g) = orbit_value_grad(&x, &y, &u);
        let eps = 1e-6;
        let mut up = u.clone();
        up.axpy(Complex64::new(eps, 0.0), &h);
        let mut um = u.clone();
        um.axpy(Complex64::new(-eps, 0.0), &h);
        let fd = (orbit_value_grad(&x, &y, &up).0 - orbit_value_grad(&x, &y, &um).0) / (2.0 * eps);
        assert!((fd - g.hs_inner(&h).re).abs() < 1e-7);
    }

    #[test]
    fn plain_optimizer_finds_conjugates() {
        let cfg = OptConfig { max_iters: 3000, tol: 1e-10, ..OptConfig::default() };
        let mut rng = RngStream::new(8, 4).rng();
        let x = sample_ginibre(8, 1, &mut rng);
        let y = x.conjugate_by(&sample_haar_unitary(8, &mut rng));
        assert!(psi_distance_plain(&x, &y, &cfg).unwrap().value < 1e-4);
    }
}
