//! Multi-start local optimization over operator-norm balls and over the
//! unitary group.
//!
//! Every returned value is attained by the returned witness, so a minimum is
//! an upper bound on the true infimum.

mod ball;
mod unitary;

pub use ball::{minimize_over_ball, project_opnorm_ball};
pub use unitary::minimize_over_unitaries;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, MatrixTuple, RngStream};

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;
/// Initial step for the next line search: the minimizer of the quadratic
/// through `f`, the directional derivative `slope` (per unit step) and the
/// accepted value `ft` at step `s`, kept within `[s/4, 2s]`. Plain doubling
/// makes descent oscillate across narrow valleys.
pub(crate) fn next_step(f: f64, ft: f64, slope: f64, s: f64, max: f64) -> f64 {
    let curvature = (ft - f - slope * s) / (s * s);
    let proposal = if curvature > 0.0 && slope < 0.0 { -slope / (2.0 * curvature) } else { 2.0 * s };
    proposal.clamp(0.25 * s, 2.0 * s).min(max)
}

/// Feasibility slack allowed on returned witnesses.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    pub starts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    /// Stopping threshold on the (projected or Riemannian) gradient norm.
    pub tol: f64,
    pub seed: RngStream,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { starts: 8, max_iters: 500, step_init: 0.5, tol: 1e-8, seed: RngStream::new(0, 0) }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.starts > 64 {
            return Err(Error::InvalidArgument(format!("starts must be in 1..=64, got {}", self.starts)));
        }
        if self.max_iters == 0 || !(self.step_init > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("optimizer budget, step and tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: RngStream) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub value: f64,
    pub witness: MatrixTuple,
    pub converged: bool,
    pub iters_used: usize,
    /// Index of the winning start (extra starts come after the default ones).
    pub start_index: usize,
}

/// A differentiable objective on matrix tuples. The gradient `G` is the
/// Riesz representative for `Re ⟨G, H⟩`, so `f(X + sH) = f(X) + s Re⟨G,H⟩ + o(s)`.
pub trait Objective: Sync {
    fn value_grad(&self, x: &MatrixTuple) -> Result<(f64, MatrixTuple)>;
}

impl<F> Objective for F
where
    F: Fn(&MatrixTuple) -> Result<(f64, MatrixTuple)> + Sync,
{
    fn value_grad(&self, x: &MatrixTuple) -> Result<(f64, MatrixTuple)> {
        self(x)
    }
}

/// Objective on a single unitary `U`, with Euclidean gradient `G` in the
/// same sense as [`Objective`].
pub trait UnitaryObjective: Sync {
    fn value_grad(&self, u: &ComplexMatrix) -> Result<(f64, ComplexMatrix)>;
}

impl<F> UnitaryObjective for F
where
    F: Fn(&ComplexMatrix) -> Result<(f64, ComplexMatrix)> + Sync,
{
    fn value_grad(&self, u: &ComplexMatrix) -> Result<(f64, ComplexMatrix)> {
        self(u)
    }
}

/// Per-start outcome before reduction.
pub(crate) struct StartOutcome {
    pub value: f64,
    pub witness: MatrixTuple,
    pub converged: bool,
    pub iters: usize,
}

/// Smallest value wins; ties go to the lowest start index.
pub(crate) fn reduce_starts(outcomes: Vec<Option<StartOutcome>>) -> Result<OptResult> {
    let mut best: Option<(usize, StartOutcome)> = None;
    for (k, o) in outcomes.into_iter().enumerate() {
        let Some(o) = o else { continue };
        let better = match &best {
            None => true,
            Some((_, b)) => o.value < b.value,
        };
        if better {
            best = Some((k, o));
        }
    }
    let (start_index, b) =
        best.ok_or_else(|| Error::Numerical("every optimizer start produced a non-finite objective".into()))?;
    Ok(OptResult { value: b.value, witness: b.witness, converged: b.converged, iters_used: b.iters, start_index })
}

fn finite_pair(v: f64, g: &MatrixTuple) -> bool {
    v.is_finite() && g.is_finite()
}
