//! Decompositions and functional calculus.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::dense::HERMITIAN_TOL;
use super::ComplexMatrix;
use crate::error::Result;

/// Relative accuracy targeted by [`operator_norm`].
pub const OPNORM_REL_TOL: f64 = 1e-10;

const SUBSPACE_BLOCK: usize = 6;
const SUBSPACE_MAX_ITERS: usize = 5000;

/// Largest singular value.
///
/// Small matrices go through the eigenvalues of `X^* X`. Larger ones use block subspace
/// iteration on `X^* X` (QR re-orthonormalization and a Rayleigh–Ritz step per
/// sweep) from a fixed start block, so the result is reproducible.
pub fn operator_norm(x: &ComplexMatrix) -> f64 {
    let n = x.dim();
    if n <= 64 {
        return singular_values(x)[0];
    }
    subspace_top_singular(x)
}

fn subspace_top_singular(x: &ComplexMatrix) -> f64 {
    let n = x.dim();
    let k = SUBSPACE_BLOCK.min(n);
    let a = x.as_nalgebra();
    let ah = a.adjoint();
    // deterministic start: smooth, linearly independent columns
    let mut v = DMatrix::<Complex64>::from_fn(n, k, |i, j| {
        let t = (i as f64 + 1.0) * (j as f64 + 1.0) / (n as f64 + 1.0);
        Complex64::new((3.1 * t).cos() + 1.0 / (1.0 + j as f64), (1.7 * t + j as f64).sin())
    });
    let mut prev = 0.0f64;
    for _ in 0..SUBSPACE_MAX_ITERS {
        let w = &ah * (a * &v);
        let q = w.qr().q();
        // Rayleigh–Ritz on span(q)
        let aq = a * &q;
        let small = aq.adjoint() * &aq;
        let top = SymmetricEigen::new(small)
            .eigenvalues
            .iter()
            .copied()
            .fold(0.0f64, f64::max)
            .max(0.0);
        v = q;
        if top > 0.0 && (top - prev).abs() <= 0.1 * OPNORM_REL_TOL * top {
            return top.sqrt();
        }
        if top == 0.0 {
            return 0.0;
        }
        prev = top;
    }
    prev.sqrt()
}

/// Eigen-decomposition of a self-adjoint matrix: ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (sym, _) = h.ingest_self_adjoint(HERMITIAN_TOL.max(1e-10 * h.frobenius_norm()))?;
    let eig = SymmetricEigen::new(sym.into_nalgebra());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, ComplexMatrix::from_nalgebra(vectors)))
}

/// Ascending eigenvalues of a self-adjoint matrix, without eigenvectors.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let (sym, _) = h.ingest_self_adjoint(HERMITIAN_TOL.max(1e-10 * h.frobenius_norm()))?;
    let mut v: Vec<f64> = sym.into_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigen-decomposition of the Gram matrix `X^* X`: squared singular values
/// (clamped at 0, ascending) and right singular vectors.
///
/// nalgebra's complex SVD can stall on clustered singular values, which is
/// exactly the situation after a projection onto `D_r`; the Hermitian
/// eigensolver does not.
fn gram_eigen(x: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let g = x.adjoint().matmul(x).hermitian_part();
    let (vals, vecs) = hermitian_eigen(&g).expect("Gram matrix is self-adjoint");
    (vals.into_iter().map(|v| v.max(0.0)).collect(), vecs)
}

/// Singular values in descending order.
pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    let g = x.adjoint().matmul(x).hermitian_part();
    let mut s: Vec<f64> =
        hermitian_eigenvalues(&g).expect("Gram matrix is self-adjoint").into_iter().map(|v| v.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Normalized trace norm `(1/n) Σ σ_k`.
pub fn normalized_trace_norm(x: &ComplexMatrix) -> f64 {
    singular_values(x).iter().sum::<f64>() / x.dim() as f64
}

/// Clips all singular values at `r`. Matrices already inside the ball are
/// returned unchanged.
pub fn clip_singular_values(x: &ComplexMatrix, r: f64) -> ComplexMatrix {
    // cheap exit: the Frobenius norm bounds the operator norm
    if x.frobenius_norm() <= r {
        return x.clone();
    }
    let (sq, v) = gram_eigen(x);
    if sq.iter().all(|&s| s <= r * r) {
        return x.clone();
    }
    // X V diag(min(1, r/σ)) V^* = X - X V diag(1 - r/σ)_{σ > r} V^*
    let n = x.dim();
    let mut shrink = ComplexMatrix::zeros(n);
    for (k, &s2) in sq.iter().enumerate() {
        if s2 <= r * r {
            continue;
        }
        let w = 1.0 - r / s2.sqrt();
        for i in 0..n {
            for j in 0..n {
                let val = shrink.get(i, j) + v.get(i, k) * v.get(j, k).conj() * w;
                shrink.set(i, j, val);
            }
        }
    }
    x - &x.matmul(&shrink)
}

/// `e^{iH}` for self-adjoint `H` via its eigen-decomposition.
pub fn unitary_from_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = h.dim();
    let mut scaled = vecs.clone();
    for (j, &lam) in vals.iter().enumerate() {
        let phase = Complex64::new(0.0, lam).exp();
        for i in 0..n {
            let v = scaled.get(i, j) * phase;
            scaled.set(i, j, v);
        }
    }
    Ok(scaled.matmul(&vecs.adjoint()))
}

/// Nearest-unitary correction through QR with phase normalization; removes
/// drift accumulated over many multiplicative updates.
pub fn reunitarize(u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.dim();
    let qr = u.as_nalgebra().clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let rjj = r[(j, j)];
        if rjj.norm() > 0.0 {
            let phase = rjj / rjj.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    ComplexMatrix::from_nalgebra(q)
}
