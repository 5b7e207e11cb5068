use rayon::prelude::*;

use super::{finite_pair, next_step, reduce_starts, Objective, OptConfig, OptResult, StartOutcome, ARMIJO_C};
use crate::error::{Error, Result};
use crate::matrix::{clip_singular_values, sample_ginibre, MatrixTuple};

/// Projection onto `D_r^d`: singular values of each entry clipped at `r`.
pub fn project_opnorm_ball(x: &MatrixTuple, r: f64) -> MatrixTuple {
    assert!(r > 0.0, "ball radius must be positive");
    let mats = x.mats().iter().map(|m| clip_singular_values(m, r)).collect();
    MatrixTuple::new(mats).expect("projection keeps shapes")
}

/// Projected gradient descent over `D_r^d` from several starts.
///
/// Start 0 is the origin, the next `cfg.starts - 1` are Ginibre draws scaled to
/// the radius, and `extra_starts` (projected first) come last. Steps are
/// backtracked by halving until the Armijo condition holds; the next trial
/// step comes from a quadratic model of the last accepted one.
pub fn minimize_over_ball(
    obj: &dyn Objective,
    r: f64,
    n: usize,
    d: usize,
    cfg: &OptConfig,
    extra_starts: &[MatrixTuple],
) -> Result<OptResult> {
    cfg.validate()?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {r}")));
    }
    let mut starts = Vec::with_capacity(cfg.starts + extra_starts.len());
    starts.push(MatrixTuple::zeros(n, d));
    for k in 1..cfg.starts {
        let g = sample_ginibre(n, d, &mut cfg.seed.child(k as u64).rng());
        starts.push(g.scale(0.5 * r));
    }
    for s in extra_starts {
        if s.n() != n || s.d() != d {
            return Err(Error::DimensionMismatch("extra start has the wrong shape".into()));
        }
        starts.push(s.clone());
    }
    let outcomes: Vec<Option<StartOutcome>> =
        starts.par_iter().map(|s| descend(obj, project_opnorm_ball(s, r), r, cfg)).collect();
    reduce_starts(outcomes)
}

fn descend(obj: &dyn Objective, mut x: MatrixTuple, r: f64, cfg: &OptConfig) -> Option<StartOutcome> {
    let (mut f, mut g) = obj.value_grad(&x).ok()?;
    if !finite_pair(f, &g) {
        return None;
    }
    let step_max = cfg.step_init * 1e4;
    let step_min = cfg.step_init * 1e-14;
    let mut step = cfg.step_init;
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let mut s = step;
        let accepted = loop {
            let mut trial = x.clone();
            trial.axpy(-s, &g);
            let trial = project_opnorm_ball(&trial, r);
            let moved_sq = trial.sub(&x).hs_norm_sq();
            if moved_sq == 0.0 {
                break None;
            }
            match obj.value_grad(&trial) {
                Ok((ft, gt)) if finite_pair(ft, &gt) && ft <= f - ARMIJO_C * moved_sq / s => {
                    let slope = trial.sub(&x).hs_inner(&g).expect("same shape").re / s;
                    break Some((trial, ft, gt, moved_sq, s, slope));
                }
                _ => {}
            }
            s *= 0.5;
            if s < step_min {
                break None;
            }
        };
        match accepted {
            None => {
                // no admissible decrease: stationary up to the step floor
                converged = true;
                break;
            }
            Some((xt, ft, gt, moved_sq, s_used, slope)) => {
                step = next_step(f, ft, slope, s_used, step_max);
                x = xt;
                f = ft;
                g = gt;
                if moved_sq.sqrt() / s_used < cfg.tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    Some(StartOutcome { value: f, witness: x, converged, iters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{operator_norm, ComplexMatrix, Complex64, RngStream};

    fn hs_sq(x: &MatrixTuple) -> Result<(f64, MatrixTuple)> {
        Ok((x.hs_norm_sq(), x.scale(2.0)))
    }

    #[test]
    fn projection_examples() {
        let x = MatrixTuple::single(ComplexMatrix::from_real_diagonal(&[0.3, -0.9]));
        assert_eq!(project_opnorm_ball(&x, 1.0), x);
        let two = MatrixTuple::single(ComplexMatrix::identity(3).scale_real(2.0));
        let p = project_opnorm_ball(&two, 1.0);
        assert!(p.get(0).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn projection_idempotent_and_nonexpansive() {
        let mut rng = RngStream::new(5, 5).rng();
        for _ in 0..10 {
            let a = sample_ginibre(5, 2, &mut rng).scale(2.0);
            let b = sample_ginibre(5, 2, &mut rng).scale(2.0);
            let pa = project_opnorm_ball(&a, 1.0);
            let pb = project_opnorm_ball(&b, 1.0);
            let again = pa.hs_distance(&project_opnorm_ball(&pa, 1.0)).unwrap();
            assert!(again < 1e-12, "{again} {}", pa.max_operator_norm());
            assert!(pa.hs_distance(&pb).unwrap() <= a.hs_distance(&b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn minimizes_norm_to_zero() {
        let res = minimize_over_ball(&hs_sq, 1.0, 4, 2, &OptConfig::default(), &[]).unwrap();
        assert!(res.value.abs() < 1e-14);
        assert_eq!(res.start_index, 0);
    }

    #[test]
    fn linear_objective_hits_minus_identity() {
        // Re tr(Y) = Re⟨I, Y⟩, minimized over D_1 at Y = -I
        let n = 4;
        let obj = |y: &MatrixTuple| -> Result<(f64, MatrixTuple)> {
            Ok((y.get(0).normalized_trace().re, MatrixTuple::single(ComplexMatrix::identity(n))))
        };
        let res = minimize_over_ball(&obj, 1.0, n, 1, &OptConfig::default(), &[]).unwrap();
        assert!((res.value + 1.0).abs() < 1e-8, "{}", res.value);
        assert!(res.witness.get(0).max_abs_diff(&ComplexMatrix::identity(n).scale_real(-1.0)) < 1e-6);
        assert!(operator_norm(res.witness.get(0)) <= 1.0 + 1e-9);
    }

    #[test]
    fn recovers_feasible_target() {
        let n = 3;
        let c = ComplexMatrix::from_fn(n, |i, j| Complex64::new(0.2 * i as f64 - 0.1 * j as f64, 0.05 * (i + j) as f64));
        assert!(operator_norm(&c) < 1.0);
        let target = MatrixTuple::single(c);
        let obj = |y: &MatrixTuple| -> Result<(f64, MatrixTuple)> {
            let diff = y.sub(&target);
            Ok((diff.hs_norm_sq(), diff.scale(2.0)))
        };
        let res = minimize_over_ball(&obj, 1.0, n, 1, &OptConfig::default(), &[]).unwrap();
        assert!(res.value < 1e-12);
        assert!(res.witness.hs_distance(&target).unwrap() < 1e-6);
    }

    #[test]
    fn deterministic_and_feasible() {
        let n = 3;
        // nonconvex: -|tr(Y^2)|^2 style objective through Re tr(Y Y) squared
        let obj = |y: &MatrixTuple| -> Result<(f64, MatrixTuple)> {
            let m = y.get(0);
            let t = m.matmul(m).normalized_trace().re;
            // d Re tr(Y²) = Re tr((2 Y^*)^* H)
            let g = m.adjoint().scale_real(2.0);
            Ok((-t * t, MatrixTuple::single(g.scale_real(-2.0 * t))))
        };
        let cfg = OptConfig { seed: RngStream::new(9, 1), ..OptConfig::default() };
        let a = minimize_over_ball(&obj, 1.5, n, 1, &cfg, &[]).unwrap();
        let b = minimize_over_ball(&obj, 1.5, n, 1, &cfg, &[]).unwrap();
        assert_eq!(a, b);
        assert!(operator_norm(a.witness.get(0)) <= 1.5 + 1e-9);
        // an extra feasible start can only help
        let p = MatrixTuple::single(ComplexMatrix::identity(n).scale_real(1.5));
        let with_p = minimize_over_ball(&obj, 1.5, n, 1, &cfg, &[p.clone()]).unwrap();
        assert!(with_p.value <= obj(&p).unwrap().0 + 1e-9);
    }
}
