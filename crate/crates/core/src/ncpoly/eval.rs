//! Evaluation of polynomials and formulas on matrix tuples, with gradients.
//!
//! Gradients follow the convention of [`crate::optimize::Objective`]: the
//! gradient of `φ` in a variable `v` is the matrix `G` with
//! `d/ds φ(v + sH) = Re tr_n(G^* H)`.

use num_complex::Complex64;
use serde::Serialize;

use super::formula::{Formula, Part, QuantKind, DEFAULT_MAX_DEPTH};
use super::poly::StarPolynomial;
use super::word::{Letter, StarWord, Var};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, MatrixTuple, RngStream};
use crate::optimize::{minimize_over_ball, OptConfig};

/// Tie width under which `max`/`min`/`abs`/`sqrt` are treated as non-smooth.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, serde::Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub opt: OptConfig,
    pub max_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { opt: OptConfig::default(), max_depth: DEFAULT_MAX_DEPTH }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalDiagnostics {
    /// Some quantifier optimization ran out of iterations before converging.
    pub budget_exhausted: bool,
    /// A non-smooth connective was differentiated at a tie.
    pub subgradient_used: bool,
    pub quantifier_evaluations: usize,
}

impl EvalDiagnostics {
    fn merge(&mut self, other: &EvalDiagnostics) {
        self.budget_exhausted |= other.budget_exhausted;
        self.subgradient_used |= other.subgradient_used;
        self.quantifier_evaluations += other.quantifier_evaluations;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub diagnostics: EvalDiagnostics,
}

/// Variable assignment: the free tuple plus values of bound variables in scope.
#[derive(Clone)]
struct Env<'a> {
    free: &'a [ComplexMatrix],
    bound: Vec<(usize, ComplexMatrix)>,
}

impl<'a> Env<'a> {
    fn lookup(&self, v: Var) -> Result<&ComplexMatrix> {
        match v {
            Var::Free(i) => self
                .free
                .get(i - 1)
                .ok_or(Error::VariableOutOfRange { index: i, d: self.free.len() }),
            Var::Bound(k) => self
                .bound
                .iter()
                .rev()
                .find(|(j, _)| *j == k)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::InvalidArgument(format!("bound variable y{k} has no value"))),
        }
    }

    fn n(&self) -> usize {
        self.free[0].dim()
    }
}

fn letter_matrix(env: &Env<'_>, l: Letter) -> Result<ComplexMatrix> {
    let m = env.lookup(l.var)?;
    Ok(if l.star { m.adjoint() } else { m.clone() })
}

fn word_matrix(env: &Env<'_>, w: &StarWord) -> Result<ComplexMatrix> {
    let mut acc: Option<ComplexMatrix> = None;
    for &l in w.letters() {
        let m = letter_matrix(env, l)?;
        acc = Some(match acc {
            None => m,
            Some(a) => a.matmul(&m),
        });
    }
    Ok(acc.unwrap_or_else(|| ComplexMatrix::identity(env.n())))
}

fn poly_matrix(env: &Env<'_>, p: &StarPolynomial) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(env.n());
    for (w, c) in p.terms() {
        out.axpy(*c, &word_matrix(env, w)?);
    }
    Ok(out)
}

/// Matrix value of a *-polynomial at `X`.
pub fn eval_polynomial(p: &StarPolynomial, x: &MatrixTuple) -> Result<ComplexMatrix> {
    if p.vars().any(|v| matches!(v, Var::Bound(_))) {
        return Err(Error::InvalidArgument("polynomial mentions bound variables".into()));
    }
    let env = Env { free: x.mats(), bound: Vec::new() };
    poly_matrix(&env, p)
}

/// `tr_n(p(X))` for a polynomial over the environment.
fn poly_trace(env: &Env<'_>, p: &StarPolynomial) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, c) in p.terms() {
        let t = match w.len() {
            0 => Complex64::new(1.0, 0.0),
            1 => letter_matrix(env, w.letters()[0])?.normalized_trace(),
            _ => {
                let (head, last) = w.letters().split_at(w.len() - 1);
                let prefix = word_matrix(env, &StarWord(head.to_vec()))?;
                prefix.trace_of_product(&letter_matrix(env, last[0])?)
            }
        };
        acc += c * t;
    }
    Ok(acc)
}

/// Accumulates the gradient of `Re tr_n(c · w)` into `grads` for the requested
/// variables.
fn accumulate_word_grad(
    env: &Env<'_>,
    w: &StarWord,
    c: Complex64,
    wrt: &[Var],
    grads: &mut [ComplexMatrix],
) -> Result<()> {
    let letters = w.letters();
    let m = letters.len();
    if m == 0 || !letters.iter().any(|l| wrt.contains(&l.var)) {
        return Ok(());
    }
    let mats: Vec<ComplexMatrix> = letters.iter().map(|&l| letter_matrix(env, l)).collect::<Result<_>>()?;
    let n = env.n();
    // prefix[k] = a_1 … a_k, suffix[k] = a_{k+1} … a_m
    let mut prefix = vec![ComplexMatrix::identity(n)];
    for a in &mats {
        let next = prefix.last().unwrap().matmul(a);
        prefix.push(next);
    }
    let mut suffix = vec![ComplexMatrix::identity(n); m + 1];
    for k in (0..m).rev() {
        suffix[k] = mats[k].matmul(&suffix[k + 1]);
    }
    for (k, l) in letters.iter().enumerate() {
        let Some(slot) = wrt.iter().position(|v| *v == l.var) else { continue };
        // d tr(L δ R) = tr(R L δ) with M = R L
        let mm = suffix[k + 1].matmul(&prefix[k]);
        let g = if l.star { &mm * c } else { &mm.adjoint() * c.conj() };
        grads[slot] += &g;
    }
    Ok(())
}

struct Ctx<'c> {
    cfg: &'c EvalConfig,
}

/// Value, diagnostics and (optionally) gradients of `phi`.
struct Out {
    value: f64,
    grads: Option<Vec<ComplexMatrix>>,
    diag: EvalDiagnostics,
}

impl Ctx<'_> {
    /// `node_id` numbers quantifier nodes in pre-order so optimizer seeds do
    /// not depend on variable names.
    fn eval(&self, phi: &Formula, env: &Env<'_>, wrt: Option<&[Var]>, node_id: &mut u64) -> Result<Out> {
        let n = env.n();
        let zero_grads = |k: usize| (0..k).map(|_| ComplexMatrix::zeros(n)).collect::<Vec<_>>();
        let mut diag = EvalDiagnostics::default();
        let out = match phi {
            Formula::Basic { part, poly } => {
                let t = poly_trace(env, poly)?;
                let value = match part {
                    Part::Re => t.re,
                    Part::Im => t.im,
                };
                let grads = match wrt {
                    None => None,
                    Some(vars) => {
                        let mut g = zero_grads(vars.len());
                        let rot = match part {
                            Part::Re => Complex64::new(1.0, 0.0),
                            Part::Im => Complex64::new(0.0, -1.0),
                        };
                        for (w, c) in poly.terms() {
                            accumulate_word_grad(env, w, c * rot, vars, &mut g)?;
                        }
                        Some(g)
                    }
                };
                Out { value, grads, diag }
            }
            Formula::Const(c) => Out { value: *c, grads: wrt.map(|v| zero_grads(v.len())), diag },
            Formula::Scale(s, b) => {
                let o = self.eval(b, env, wrt, node_id)?;
                Out {
                    value: s * o.value,
                    grads: o.grads.map(|g| g.into_iter().map(|m| m.scale_real(*s)).collect()),
                    diag: o.diag,
                }
            }
            Formula::Sum(children) => {
                let mut value = 0.0;
                let mut grads = wrt.map(|v| zero_grads(v.len()));
                for c in children {
                    let o = self.eval(c, env, wrt, node_id)?;
                    value += o.value;
                    diag.merge(&o.diag);
                    if let (Some(acc), Some(g)) = (grads.as_mut(), o.grads) {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            *a += b;
                        }
                    }
                }
                Out { value, grads, diag }
            }
            Formula::Product(children) => {
                let outs: Vec<Out> =
                    children.iter().map(|c| self.eval(c, env, wrt, node_id)).collect::<Result<_>>()?;
                let values: Vec<f64> = outs.iter().map(|o| o.value).collect();
                let value = values.iter().product();
                let grads = wrt.map(|v| {
                    let mut acc = zero_grads(v.len());
                    for (i, o) in outs.iter().enumerate() {
                        let others: f64 = values.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).product();
                        for (a, g) in acc.iter_mut().zip(o.grads.as_ref().unwrap()) {
                            a.axpy(Complex64::new(others, 0.0), g);
                        }
                    }
                    acc
                });
                for o in &outs {
                    diag.merge(&o.diag);
                }
                Out { value, grads, diag }
            }
            Formula::Max(children) | Formula::Min(children) => {
                let is_max = matches!(phi, Formula::Max(_));
                let outs: Vec<Out> =
                    children.iter().map(|c| self.eval(c, env, wrt, node_id)).collect::<Result<_>>()?;
                let mut best = 0;
                for (i, o) in outs.iter().enumerate() {
                    let better = if is_max { o.value > outs[best].value } else { o.value < outs[best].value };
                    if better {
                        best = i;
                    }
                }
                for o in &outs {
                    diag.merge(&o.diag);
                }
                let value = outs[best].value;
                if wrt.is_some() && outs.iter().enumerate().any(|(i, o)| i != best && (o.value - value).abs() <= TIE_TOL) {
                    diag.subgradient_used = true;
                }
                let grads = outs.into_iter().nth(best).unwrap().grads;
                Out { value, grads, diag }
            }
            Formula::Abs(b) => {
                let o = self.eval(b, env, wrt, node_id)?;
                diag.merge(&o.diag);
                let sign = if o.value > 0.0 {
                    1.0
                } else if o.value < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if wrt.is_some() && o.value.abs() <= TIE_TOL {
                    diag.subgradient_used = true;
                }
                Out {
                    value: o.value.abs(),
                    grads: o.grads.map(|g| g.into_iter().map(|m| m.scale_real(sign)).collect()),
                    diag,
                }
            }
            Formula::Sqrt(b) => {
                let o = self.eval(b, env, wrt, node_id)?;
                diag.merge(&o.diag);
                let value = o.value.max(0.0).sqrt();
                let factor = if value > TIE_TOL { 0.5 / value } else { 0.0 };
                if wrt.is_some() && value <= TIE_TOL {
                    diag.subgradient_used = true;
                }
                Out { value, grads: o.grads.map(|g| g.into_iter().map(|m| m.scale_real(factor)).collect()), diag }
            }
            Formula::Quant { kind, var, radius, body } => {
                let my_id = *node_id;
                *node_id += body.quantifier_count() as u64 + 1;
                self.eval_quantifier(*kind, *var, *radius, body, env, wrt, my_id)?
            }
        };
        if !out.value.is_finite() {
            return Err(Error::NonFinite(format!("value of `{phi}`")));
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_quantifier(
        &self,
        kind: QuantKind,
        var: usize,
        radius: f64,
        body: &Formula,
        env: &Env<'_>,
        wrt: Option<&[Var]>,
        my_id: u64,
    ) -> Result<Out> {
        let n = env.n();
        let sign = match kind {
            QuantKind::Sup => -1.0,
            QuantKind::Inf => 1.0,
        };
        let bound_var = [Var::Bound(var)];
        let objective = |y: &MatrixTuple| -> Result<(f64, MatrixTuple)> {
            let mut inner = env.clone();
            inner.bound.push((var, y.get(0).clone()));
            let mut id = my_id + 1;
            let o = self.eval(body, &inner, Some(&bound_var), &mut id)?;
            let g = o.grads.expect("requested").remove(0).scale_real(sign);
            Ok((sign * o.value, MatrixTuple::single(g)))
        };
        let opt = self.cfg.opt.with_seed(self.cfg.opt.seed.child(my_id));
        let res = minimize_over_ball(&objective, radius, n, 1, &opt, &[])?;
        let witness = res.witness.get(0).clone();
        let mut diag = EvalDiagnostics { budget_exhausted: !res.converged, quantifier_evaluations: 1, ..Default::default() };
        // Danskin: the envelope gradient is the body's gradient at the witness.
        let (value, grads) = {
            let mut inner = env.clone();
            inner.bound.push((var, witness));
            let mut id = my_id + 1;
            let o = self.eval(body, &inner, wrt, &mut id)?;
            diag.merge(&o.diag);
            (o.value, o.grads)
        };
        Ok(Out { value, grads, diag })
    }
}

fn check_free_vars(phi: &Formula, d: usize) -> Result<()> {
    if let Some(&bad) = phi.free_vars().iter().find(|&&i| i > d) {
        return Err(Error::VariableOutOfRange { index: bad, d });
    }
    Ok(())
}

/// `φ(X)`. Quantifiers are approximated by multi-start projected gradient
/// over their ball: a `sup` returns a lower bound of the true supremum and an
/// `inf` an upper bound, each attained at a witness.
pub fn eval_formula(phi: &Formula, x: &MatrixTuple, cfg: &EvalConfig) -> Result<Evaluation> {
    phi.validate(cfg.max_depth)?;
    check_free_vars(phi, x.d())?;
    let env = Env { free: x.mats(), bound: Vec::new() };
    let mut id = 0;
    let out = Ctx { cfg }.eval(phi, &env, None, &mut id)?;
    Ok(Evaluation { value: out.value, diagnostics: out.diagnostics() })
}

impl Out {
    fn diagnostics(&self) -> EvalDiagnostics {
        self.diag.clone()
    }
}

/// Value and gradient with respect to every free variable of the tuple.
/// Quantified formulas are differentiated through their witnesses (envelope
/// rule), which is exact only when the optimizer found the true optimum.
pub fn value_and_gradient(phi: &Formula, x: &MatrixTuple, cfg: &EvalConfig) -> Result<(Evaluation, MatrixTuple)> {
    phi.validate(cfg.max_depth)?;
    check_free_vars(phi, x.d())?;
    let env = Env { free: x.mats(), bound: Vec::new() };
    let vars: Vec<Var> = (1..=x.d()).map(Var::Free).collect();
    let mut id = 0;
    let out = Ctx { cfg }.eval(phi, &env, Some(&vars), &mut id)?;
    let diag = out.diagnostics();
    let grads = MatrixTuple::new(out.grads.expect("requested"))?;
    Ok((Evaluation { value: out.value, diagnostics: diag }, grads))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub grad: MatrixTuple,
    /// A `max`/`min`/`abs`/`sqrt` was at a tie and a subgradient was chosen.
    pub subgradient_used: bool,
}

/// Gradient of a quantifier-free formula with respect to the tuple.
pub fn cyclic_gradient(phi: &Formula, x: &MatrixTuple) -> Result<Gradient> {
    if !phi.is_quantifier_free() {
        return Err(Error::NotDifferentiable("cyclic_gradient needs a quantifier-free formula".into()));
    }
    let cfg = EvalConfig { opt: OptConfig { seed: RngStream::new(0, 0), ..OptConfig::default() }, max_depth: 0 };
    let (ev, grad) = value_and_gradient(phi, x, &cfg)?;
    Ok(Gradient { value: ev.value, grad, subgradient_used: ev.diagnostics.subgradient_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{normalized_trace_norm, sample_ginibre, Complex64};
    use crate::ncpoly::parse_formula;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn polynomial_examples() {
        let x = MatrixTuple::single(ComplexMatrix::identity(3));
        let p = StarPolynomial::word(&[(1, false), (1, true)]);
        assert!(eval_polynomial(&p, &x).unwrap().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);

        let x = MatrixTuple::new(vec![
            ComplexMatrix::from_real_diagonal(&[1.0, 2.0]),
            ComplexMatrix::from_real_diagonal(&[-3.0, 0.5]),
        ])
        .unwrap();
        let comm = StarPolynomial::word(&[(1, false), (2, false)])
            .add(&StarPolynomial::word(&[(2, false), (1, false)]).scale(c(-1.0)));
        assert!(eval_polynomial(&comm, &x).unwrap().max_abs_diff(&ComplexMatrix::zeros(2)) == 0.0);

        let nil = MatrixTuple::single(ComplexMatrix::from_rows(&[vec![c(0.0), c(1.0)], vec![c(0.0), c(0.0)]]).unwrap());
        let sq = StarPolynomial::word(&[(1, false), (1, false)]);
        assert!(eval_polynomial(&sq, &nil).unwrap().max_abs_diff(&ComplexMatrix::zeros(2)) == 0.0);

        let out_of_range = StarPolynomial::word(&[(3, false)]);
        assert!(matches!(eval_polynomial(&out_of_range, &x), Err(Error::VariableOutOfRange { index: 3, d: 2 })));
    }

    #[test]
    fn polynomial_respects_adjoint() {
        let x = sample_ginibre(4, 2, &mut RngStream::new(3, 0).rng());
        let p = StarPolynomial::word(&[(1, false), (2, true), (1, false)])
            .scale(Complex64::new(0.3, -1.1))
            .add(&StarPolynomial::word(&[(2, false)]));
        let lhs = eval_polynomial(&p.adjoint(), &x).unwrap();
        let rhs = eval_polynomial(&p, &x).unwrap().adjoint();
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn formula_examples() {
        let cfg = EvalConfig::default();
        let id = MatrixTuple::single(ComplexMatrix::identity(3));
        let phi = parse_formula("tr.re(x1 x1*)").unwrap();
        assert!((eval_formula(&phi, &id, &cfg).unwrap().value - 1.0).abs() < 1e-15);

        let phi = parse_formula("sup{y1 in D(1.0)} tr.re(y1 x1*)").unwrap();
        let v = eval_formula(&phi, &id, &cfg).unwrap().value;
        assert!((v - 1.0).abs() < 1e-8, "{v}");

        let phi = parse_formula("inf{y1 in D(1.0)} abs(tr.im(y1))").unwrap();
        let x = sample_ginibre(3, 1, &mut RngStream::new(1, 1).rng());
        assert!(eval_formula(&phi, &x, &cfg).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn sup_matches_trace_norm_duality() {
        // sup over D_1 of Re tr(Y X^*) is the normalized trace norm of X
        let cfg = EvalConfig::default();
        let phi = parse_formula("sup{y1 in D(1.0)} tr.re(y1 x1*)").unwrap();
        for k in 0..3 {
            let x = sample_ginibre(4, 1, &mut RngStream::new(20, k).rng());
            let oracle = normalized_trace_norm(x.get(0));
            let v = eval_formula(&phi, &x, &cfg).unwrap().value;
            assert!(v <= oracle + 1e-9, "sup estimate must not exceed the true sup");
            assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
        }
    }

    #[test]
    fn gradient_examples() {
        let zero = MatrixTuple::zeros(3, 1);
        let g = cyclic_gradient(&parse_formula("tr.re(x1 x1*)").unwrap(), &zero).unwrap();
        assert!(g.grad.hs_norm() == 0.0);
        let x = sample_ginibre(3, 1, &mut RngStream::new(2, 1).rng());
        let g = cyclic_gradient(&parse_formula("tr.re(x1)").unwrap(), &x).unwrap();
        assert!(g.grad.get(0).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(cyclic_gradient(&parse_formula("sup{y1 in D(1)} tr.re(y1)").unwrap(), &x).is_err());
        let g = cyclic_gradient(&parse_formula("abs(tr.re(x1))").unwrap(), &zero).unwrap();
        assert!(g.subgradient_used);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let phi = parse_formula(
            "tr.re(x1 x2* x1 + 0.5i x2 x2) * tr.im(x1* x2 - 2 x2) + sqrt(tr.re(x1 x1* x2 x2*) + 1) + max(tr.re(x1), -3)",
        )
        .unwrap();
        let mut rng = RngStream::new(9, 0).rng();
        let x = sample_ginibre(4, 2, &mut rng);
        let h = sample_ginibre(4, 2, &mut rng);
        let g = cyclic_gradient(&phi, &x).unwrap();
        let eps = 1e-6;
        let cfg = EvalConfig::default();
        let mut xp = x.clone();
        xp.axpy(eps, &h);
        let mut xm = x.clone();
        xm.axpy(-eps, &h);
        let fd = (eval_formula(&phi, &xp, &cfg).unwrap().value - eval_formula(&phi, &xm, &cfg).unwrap().value) / (2.0 * eps);
        let analytic = g.grad.hs_inner(&h).unwrap().re;
        assert!((fd - analytic).abs() < 1e-7 * (1.0 + fd.abs()), "{fd} vs {analytic}");
        assert!(!g.subgradient_used);
    }

    #[test]
    fn envelope_gradient_of_sup() {
        // sup_{‖y‖≤1} Re tr(y x1*) = trace norm; its gradient is the polar factor
        let phi = parse_formula("sup{y1 in D(1.0)} tr.re(y1 x1*)").unwrap();
        let x = sample_ginibre(3, 1, &mut RngStream::new(4, 4).rng());
        let (ev, g) = value_and_gradient(&phi, &x, &EvalConfig::default()).unwrap();
        let h = sample_ginibre(3, 1, &mut RngStream::new(4, 5).rng());
        let eps = 1e-6;
        let mut xp = x.clone();
        xp.axpy(eps, &h);
        let fd = (normalized_trace_norm(xp.get(0)) - ev.value) / eps;
        assert!((fd - g.hs_inner(&h).unwrap().re).abs() < 1e-4);
    }
}
