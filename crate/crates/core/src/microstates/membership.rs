//! Microstate membership tests.

use serde::{Deserialize, Serialize};

use super::spec::{NeighborhoodSpec, SpecKind};
use crate::error::{Error, Result};
use crate::matrix::{operator_norm, MatrixTuple};
use crate::ncpoly::{eval_formula, value_and_gradient, EvalConfig};
use crate::optimize::{minimize_over_ball, FEASIBILITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    In,
    Out,
    /// A quantified constraint is within the optimizer uncertainty band of
    /// its tolerance. Counted as out by volume estimates.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipConfig {
    pub eval: EvalConfig,
    /// Width of the uncertainty band around `tol` for quantified constraints.
    pub boundary_band: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self { eval: EvalConfig::default(), boundary_band: 1e-6 }
    }
}

/// `‖X_j‖_op ≤ r` for all `j`, skipping the decomposition when
/// `√n ‖X_j‖₂ ≤ r` already settles it.
pub(crate) fn in_ambient_ball(x: &MatrixTuple, r: f64) -> bool {
    let n = x.n() as f64;
    x.mats().iter().all(|m| {
        let hs = m.hs_norm_sq();
        n * hs <= r * r || operator_norm(m) <= r * (1.0 + FEASIBILITY_TOL)
    })
}

fn check_arity(x: &MatrixTuple, expected: usize) -> Result<()> {
    if x.d() != expected {
        return Err(Error::DimensionMismatch(format!("tuple has {} matrices, spec expects {expected}", x.d())));
    }
    Ok(())
}

/// Membership of `Y` in `Γ_r^{(n)}` of the spec's basic neighborhood (for
/// existential specs, of the constraint set on all `d` variables).
pub fn is_microstate(y: &MatrixTuple, spec: &NeighborhoodSpec, cfg: &MembershipConfig) -> Result<Verdict> {
    check_arity(y, spec.d)?;
    if !in_ambient_ball(y, spec.r) {
        return Ok(Verdict::Out);
    }
    constraint_verdict(y, spec, cfg)
}

fn constraint_verdict(y: &MatrixTuple, spec: &NeighborhoodSpec, cfg: &MembershipConfig) -> Result<Verdict> {
    let mut verdict = Verdict::In;
    for c in &spec.constraints {
        let ev = eval_formula(&c.formula, y, &cfg.eval)?;
        let dev = (ev.value - c.target).abs();
        if c.formula.is_quantifier_free() {
            if dev >= c.tol {
                return Ok(Verdict::Out);
            }
        } else if dev >= c.tol + cfg.boundary_band {
            return Ok(Verdict::Out);
        } else if dev >= c.tol - cfg.boundary_band || ev.diagnostics.budget_exhausted {
            verdict = Verdict::Boundary;
        }
    }
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExistentialVerdict {
    pub verdict: Verdict,
    /// Completion certifying `In`.
    pub witness: Option<MatrixTuple>,
    /// Remaining squared constraint excess at the best completion found.
    pub residual: f64,
    /// `Out` only means the optimizer found no completion.
    pub heuristic: bool,
}

/// Whether `X` extends to a microstate of `spec` (which has `X.d() + m`
/// variables) by some `Y ∈ D_r^m`. `In` is certified by the witness; `Out`
/// is heuristic.
pub fn existential_membership(
    x: &MatrixTuple,
    spec: &NeighborhoodSpec,
    cfg: &MembershipConfig,
) -> Result<ExistentialVerdict> {
    if x.d() > spec.d {
        return Err(Error::DimensionMismatch(format!("tuple has {} matrices, spec has only {}", x.d(), spec.d)));
    }
    let m = spec.d - x.d();
    if spec.kind == SpecKind::Existential && m != spec.witness_vars {
        return Err(Error::DimensionMismatch(format!(
            "spec quantifies the last {} variables but the tuple leaves {m}",
            spec.witness_vars
        )));
    }
    if m == 0 {
        let verdict = is_microstate(x, spec, cfg)?;
        return Ok(ExistentialVerdict { verdict, witness: None, residual: 0.0, heuristic: false });
    }
    let out = |residual| ExistentialVerdict { verdict: Verdict::Out, witness: None, residual, heuristic: true };
    if !in_ambient_ball(x, spec.r) {
        return Ok(ExistentialVerdict { heuristic: false, ..out(f64::INFINITY) });
    }
    let n = x.n();
    let d0 = x.d();
    // aim for the middle half of each tolerance window
    let objective = |y: &MatrixTuple| -> Result<(f64, MatrixTuple)> {
        let full = x.join(y)?;
        let mut total = 0.0;
        let mut grad = MatrixTuple::zeros(n, m);
        for c in &spec.constraints {
            let (ev, g) = value_and_gradient(&c.formula, &full, &cfg.eval)?;
            let dev = ev.value - c.target;
            let excess = dev.abs() - 0.5 * c.tol;
            if excess > 0.0 {
                total += excess * excess;
                let (_, gy) = g.split_at(d0);
                grad.axpy(2.0 * excess * dev.signum(), &gy);
            }
        }
        Ok((total, grad))
    };
    let res = minimize_over_ball(&objective, spec.r, n, m, &cfg.eval.opt, &[])?;
    let candidate = x.join(&res.witness)?;
    match constraint_verdict(&candidate, spec, cfg)? {
        Verdict::In => Ok(ExistentialVerdict {
            verdict: Verdict::In,
            witness: Some(res.witness),
            residual: res.value,
            heuristic: false,
        }),
        Verdict::Boundary => Ok(ExistentialVerdict {
            verdict: Verdict::Boundary,
            witness: Some(res.witness),
            residual: res.value,
            heuristic: true,
        }),
        Verdict::Out => Ok(out(res.value)),
    }
}

/// Membership of a sampled tuple according to the spec kind.
pub(crate) fn sample_verdict(x: &MatrixTuple, spec: &NeighborhoodSpec, cfg: &MembershipConfig) -> Result<Verdict> {
    match spec.kind {
        SpecKind::Existential => Ok(existential_membership(x, spec, cfg)?.verdict),
        SpecKind::QuantifierFree | SpecKind::Full => is_microstate(x, spec, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_gue, RngStream};
    use crate::microstates::Constraint;

    fn spec(d: usize, r: f64, kind: SpecKind, cs: &[(&str, f64, f64)]) -> NeighborhoodSpec {
        let constraints = cs.iter().map(|&(f, t, e)| Constraint::new(f, t, e).unwrap()).collect();
        NeighborhoodSpec::new(d, r, kind, constraints).unwrap()
    }

    #[test]
    fn basic_verdicts() {
        let cfg = MembershipConfig::default();
        let s = spec(1, 1.0, SpecKind::QuantifierFree, &[("tr.re(x1)", 0.0, 0.1)]);
        assert_eq!(is_microstate(&MatrixTuple::zeros(4, 1), &s, &cfg).unwrap(), Verdict::In);
        let big = MatrixTuple::single(crate::matrix::ComplexMatrix::identity(4).scale_real(2.0));
        let s2 = spec(1, 1.0, SpecKind::QuantifierFree, &[("tr.re(x1 x1*)", 4.0, 1.0)]);
        assert_eq!(is_microstate(&big, &s2, &cfg).unwrap(), Verdict::Out);
        assert!(is_microstate(&MatrixTuple::zeros(4, 2), &s, &cfg).is_err());
    }

    #[test]
    fn gue_second_moment_concentrates() {
        let cfg = MembershipConfig::default();
        let s = spec(1, 4.0, SpecKind::QuantifierFree, &[("tr.re(x1 x1)", 1.0, 0.05)]);
        let hits = (0..20)
            .filter(|&k| {
                let y = MatrixTuple::single(sample_gue(512, &mut RngStream::new(k, 0).rng()));
                is_microstate(&y, &s, &cfg).unwrap() == Verdict::In
            })
            .count();
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn quantified_boundary_band() {
        // sup over D_1 of Re tr(y x1*) at X = I is exactly 1
        let cfg = MembershipConfig::default();
        let x = MatrixTuple::single(crate::matrix::ComplexMatrix::identity(3));
        let inside = spec(1, 2.0, SpecKind::Full, &[("sup{y1 in D(1)} tr.re(y1 x1*)", 0.0, 2.0)]);
        assert_eq!(is_microstate(&x, &inside, &cfg).unwrap(), Verdict::In);
        let edge = spec(1, 2.0, SpecKind::Full, &[("sup{y1 in D(1)} tr.re(y1 x1*)", 0.0, 1.0)]);
        assert_eq!(is_microstate(&x, &edge, &cfg).unwrap(), Verdict::Boundary);
        let outside = spec(1, 2.0, SpecKind::Full, &[("sup{y1 in D(1)} tr.re(y1 x1*)", 0.0, 0.5)]);
        assert_eq!(is_microstate(&x, &outside, &cfg).unwrap(), Verdict::Out);
    }

    #[test]
    fn existential_examples() {
        let cfg = MembershipConfig::default();
        let x = MatrixTuple::single(sample_gue(4, &mut RngStream::new(2, 2).rng()).scale_real(0.5));
        let r = 2.0;
        let close = spec(2, r, SpecKind::Full, &[("sqrt(tr.re((x2 - x1)(x2 - x1)*))", 0.0, 0.01)]);
        let v = existential_membership(&x, &close, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::In);
        assert!(v.witness.unwrap().hs_distance(&x).unwrap() < 0.01);

        // a unitary y with Re tr(y) = 2 cannot exist: |tr_n(U)| <= 1
        let unitary = spec(
            2,
            1.0,
            SpecKind::Full,
            &[("tr.re((x2 x2* - 1)(x2 x2* - 1))", 0.0, 0.01), ("tr.re(x2)", 2.0, 0.1)],
        );
        let v = existential_membership(&x, &unitary, &cfg).unwrap();
        assert_eq!(v.verdict, Verdict::Out);
        assert!(v.heuristic);

        // with no witness variables it is plain membership
        let plain = spec(1, 1.0, SpecKind::QuantifierFree, &[("tr.re(x1)", 0.0, 0.1)]);
        let z = MatrixTuple::zeros(3, 1);
        assert_eq!(existential_membership(&z, &plain, &cfg).unwrap().verdict, Verdict::In);
    }
}
