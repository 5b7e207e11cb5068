use rayon::prelude::*;

use super::{next_step, reduce_starts, OptConfig, OptResult, StartOutcome, UnitaryObjective, ARMIJO_C};
use crate::error::{Error, Result};
use crate::matrix::{reunitarize, sample_haar_unitary, unitary_from_hermitian, Complex64, ComplexMatrix, MatrixTuple};

const REUNITARIZE_EVERY: usize = 50;

/// Skew-Hermitian part `(A - A^*) / 2`.
fn skew(a: &ComplexMatrix) -> ComplexMatrix {
    let mut out = a.clone();
    out -= &a.adjoint();
    out.scale_real(0.5)
}

fn inner_re(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.hs_inner(b).re
}

/// `exp(Ω) U` for skew-Hermitian `Ω`, written as `e^{iH}` with `H = -iΩ`.
fn retract(omega: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = omega * Complex64::new(0.0, -1.0);
    Ok(unitary_from_hermitian(&h)?.matmul(u))
}

/// Riemannian descent on `U(n)` from several starts.
///
/// Start 0 is the identity, the next `cfg.starts - 1` are Haar draws and
/// `extra_starts` come last. Tangent vectors are carried in the Lie algebra
/// (`U ↦ e^{Ω} U`); directions are Polak–Ribière conjugate combinations of
/// Riemannian gradients, and the iterate is re-unitarized by QR every 50
/// iterations.
pub fn minimize_over_unitaries(
    obj: &dyn UnitaryObjective,
    n: usize,
    cfg: &OptConfig,
    extra_starts: &[ComplexMatrix],
) -> Result<OptResult> {
    cfg.validate()?;
    let mut starts = Vec::with_capacity(cfg.starts + extra_starts.len());
    starts.push(ComplexMatrix::identity(n));
    for k in 1..cfg.starts {
        starts.push(sample_haar_unitary(n, &mut cfg.seed.child(k as u64).rng()));
    }
    for s in extra_starts {
        if s.dim() != n {
            return Err(Error::DimensionMismatch("extra unitary start has the wrong size".into()));
        }
        starts.push(reunitarize(s));
    }
    let outcomes: Vec<Option<StartOutcome>> = starts.par_iter().map(|u| descend(obj, u.clone(), cfg)).collect();
    reduce_starts(outcomes)
}

fn eval(obj: &dyn UnitaryObjective, u: &ComplexMatrix) -> Option<(f64, ComplexMatrix)> {
    let (f, g) = obj.value_grad(u).ok()?;
    if !(f.is_finite() && g.is_finite()) {
        return None;
    }
    // Lie-algebra gradient: df = Re⟨G, ΩU⟩ = Re⟨G U^*, Ω⟩
    Some((f, skew(&g.matmul(&u.adjoint()))))
}

fn descend(obj: &dyn UnitaryObjective, mut u: ComplexMatrix, cfg: &OptConfig) -> Option<StartOutcome> {
    let (mut f, mut grad) = eval(obj, &u)?;
    let mut dir = grad.scale_real(-1.0);
    let mut step = cfg.step_init;
    let step_min = cfg.step_init * 1e-14;
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_iters {
        if grad.hs_norm() < cfg.tol {
            converged = true;
            break;
        }
        iters += 1;
        let mut slope = inner_re(&grad, &dir);
        if slope >= 0.0 {
            dir = grad.scale_real(-1.0);
            slope = -grad.hs_norm_sq();
        }
        let mut s = step;
        let accepted = loop {
            let omega = dir.scale_real(s);
            if let Ok(trial) = retract(&omega, &u) {
                if let Some((ft, gt)) = eval(obj, &trial) {
                    if ft <= f + ARMIJO_C * s * slope {
                        break Some((trial, ft, gt, s));
                    }
                }
            }
            s *= 0.5;
            if s < step_min {
                break None;
            }
        };
        let Some((trial, ft, gt, s_used)) = accepted else {
            converged = true;
            break;
        };
        u = if iters % REUNITARIZE_EVERY == 0 { reunitarize(&trial) } else { trial };
        let next_step = next_step(f, ft, slope, s_used, cfg.step_init * 1e4);
        f = ft;
        // Polak–Ribière+, directions transported trivially in the Lie algebra
        let denom = grad.hs_norm_sq();
        let beta = if denom > 0.0 { (inner_re(&gt, &gt) - inner_re(&gt, &grad)) / denom } else { 0.0 };
        let beta = beta.max(0.0);
        let mut next = gt.scale_real(-1.0);
        next.axpy(Complex64::new(beta, 0.0), &dir);
        dir = next;
        grad = gt;
        step = next_step;
    }
    if iters % REUNITARIZE_EVERY != 0 {
        u = reunitarize(&u);
        f = eval(obj, &u)?.0;
    }
    Some(StartOutcome { value: f, witness: MatrixTuple::single(u), converged, iters })
}
