//! Potentials `V` for Gibbs measures `∝ e^{−n² V}`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sample_coordinate_gaussian, ComplexMatrix, MatrixDomain, MatrixTuple, RngStream};
use crate::ncpoly::{cyclic_gradient, eval_formula, parse_formula, EvalConfig, Formula};

/// Matrix size used for the empirical bound check.
const CHECK_N: usize = 4;
const CHECK_SAMPLES: usize = 1000;
/// Check samples are Gaussian directions rescaled to `‖X‖₂` spread over
/// `(0, CHECK_RADIUS]`.
const CHECK_RADIUS: f64 = 3.0;
const CHECK_SLACK: f64 = 1e-9;

/// Declared growth bounds `a + b‖X‖₂² ≤ V(X) ≤ A + B‖X‖₂²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub a_upper: f64,
    #[serde(rename = "B")]
    pub b_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialFile", into = "PotentialFile")]
pub struct Potential {
    formula: Formula,
    bounds: Bounds,
    domain: MatrixDomain,
    d: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    formula: String,
    bounds: Bounds,
    #[serde(default)]
    domain: MatrixDomain,
    #[serde(default)]
    d: Option<usize>,
}

impl TryFrom<PotentialFile> for Potential {
    type Error = Error;

    fn try_from(f: PotentialFile) -> Result<Self> {
        Self::new(parse_formula(&f.formula)?, f.bounds, f.domain, f.d.unwrap_or(0))
    }
}

impl From<Potential> for PotentialFile {
    fn from(p: Potential) -> Self {
        Self { formula: p.formula.to_string(), bounds: p.bounds, domain: p.domain, d: Some(p.d) }
    }
}

impl Potential {
    /// Validates the formula and the bounds, then checks the bounds on
    /// random samples; any violation is an error.
    pub fn new(formula: Formula, bounds: Bounds, domain: MatrixDomain, d: usize) -> Result<Self> {
        if !formula.is_quantifier_free() {
            return Err(Error::InvalidArgument("potentials must be quantifier-free".into()));
        }
        formula.validate(0)?;
        let used = formula.max_free_index();
        if d > 0 && used > d {
            return Err(Error::VariableOutOfRange { index: used, d });
        }
        let d = d.max(used);
        if d == 0 {
            return Err(Error::InvalidArgument("potential has no variables".into()));
        }
        let Bounds { a, b, a_upper, b_upper } = bounds;
        if ![a, b, a_upper, b_upper].iter().all(|v| v.is_finite()) || !(b > 0.0) || b_upper < b || a_upper < a {
            return Err(Error::InvalidArgument(format!(
                "bounds need b > 0, B >= b and A >= a, got a={a}, b={b}, A={a_upper}, B={b_upper}"
            )));
        }
        let p = Self { formula, bounds, domain, d };
        p.check_bounds()?;
        Ok(p)
    }

    pub fn parse(src: &str, bounds: Bounds, domain: MatrixDomain) -> Result<Self> {
        Self::new(parse_formula(src)?, bounds, domain, 0)
    }

    /// `c Σ_j ‖X_j‖₂²`.
    pub fn quadratic(c: f64, d: usize, domain: MatrixDomain) -> Result<Self> {
        let terms: Vec<String> = (1..=d).map(|j| format!("{c} * tr.re(x{j} x{j}*)")).collect();
        Self::new(
            parse_formula(&terms.join(" + "))?,
            Bounds { a: 0.0, b: c, a_upper: 0.0, b_upper: c },
            domain,
            d,
        )
    }

    /// Self-adjoint `½ tr(x²) + g tr(x⁴)`. The upper bound uses
    /// `tr(x⁴) ≤ n tr(x²)²` at the check size, so it holds on the checked
    /// region only.
    pub fn quartic(g: f64) -> Result<Self> {
        if !(g >= 0.0) {
            return Err(Error::InvalidArgument(format!("quartic coupling must be nonnegative, got {g}")));
        }
        Self::parse(
            &format!("0.5 * tr.re(x1 x1) + {g} * tr.re(x1 x1 x1 x1)"),
            Bounds { a: 0.0, b: 0.5, a_upper: 0.0, b_upper: 0.5 + 4.0 * CHECK_RADIUS * CHECK_RADIUS * g },
            MatrixDomain::SelfAdjoint,
        )
    }

    pub fn from_json(src: &str) -> Result<Self> {
        Self::try_from(serde_json::from_str::<PotentialFile>(src)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("potential serializes")
    }

    /// `V = 0`, which violates the growth bounds; only for diffusion tests.
    #[cfg(test)]
    pub(crate) fn flat(d: usize, domain: MatrixDomain) -> Self {
        Self { formula: Formula::Const(0.0), bounds: Bounds { a: 0.0, b: 0.0, a_upper: 0.0, b_upper: 0.0 }, domain, d }
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn domain(&self) -> MatrixDomain {
        self.domain
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, x: &MatrixTuple) -> Result<f64> {
        self.check_shape(x)?;
        Ok(eval_formula(&self.formula, x, &EvalConfig::default())?.value)
    }

    /// Value and gradient in the potential's domain: on self-adjoint
    /// variables the gradient is the Hermitian part of the full one.
    pub fn value_grad(&self, x: &MatrixTuple) -> Result<(f64, MatrixTuple)> {
        self.check_shape(x)?;
        let g = cyclic_gradient(&self.formula, x)?;
        let grad = match self.domain {
            MatrixDomain::General => g.grad,
            MatrixDomain::SelfAdjoint => {
                MatrixTuple::new(g.grad.mats().iter().map(ComplexMatrix::hermitian_part).collect())?
            }
        };
        Ok((g.value, grad))
    }

    /// Draw from the coordinate Gaussian of the domain with `E‖X_j‖₂² = s²`.
    pub fn sample_domain<R: Rng + ?Sized>(&self, n: usize, s: f64, rng: &mut R) -> MatrixTuple {
        let mats = (0..self.d).map(|_| sample_coordinate_gaussian(n, self.domain, s, rng).0).collect();
        MatrixTuple::new(mats).expect("uniform shapes")
    }

    /// Largest relative error of the gradient against central differences
    /// along random directions at `n`.
    pub fn gradient_check(&self, n: usize, stream: &RngStream) -> Result<f64> {
        let mut rng = stream.rng();
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let x = self.sample_domain(n, 1.0, &mut rng);
            let h = self.sample_domain(n, 1.0, &mut rng);
            let (_, g) = self.value_grad(&x)?;
            let eps = 1e-5;
            let mut xp = x.clone();
            xp.axpy(eps, &h);
            let mut xm = x.clone();
            xm.axpy(-eps, &h);
            let fd = (self.value(&xp)? - self.value(&xm)?) / (2.0 * eps);
            let an = g.hs_inner(&h)?.re;
            worst = worst.max((fd - an).abs() / (1.0 + an.abs()));
        }
        Ok(worst)
    }

    fn check_shape(&self, x: &MatrixTuple) -> Result<()> {
        if x.d() != self.d {
            return Err(Error::DimensionMismatch(format!("potential has {} variables, tuple has {}", self.d, x.d())));
        }
        Ok(())
    }

    fn check_bounds(&self) -> Result<()> {
        let mut rng = RngStream::new(0x0b0d, self.d as u64).rng();
        let Bounds { a, b, a_upper, b_upper } = self.bounds;
        for k in 0..CHECK_SAMPLES {
            let s = CHECK_RADIUS * (k as f64 + 0.5) / CHECK_SAMPLES as f64;
            let x = self.sample_domain(CHECK_N, 1.0, &mut rng);
            let x = x.scale(s / x.hs_norm());
            let v = self.value(&x)?;
            let q = x.hs_norm_sq();
            if !(v >= a + b * q - CHECK_SLACK && v <= a_upper + b_upper * q + CHECK_SLACK) {
                return Err(Error::InvalidArgument(format!(
                    "declared bounds fail at a sample with ‖X‖₂² = {q:.4}: V = {v:.6}, allowed [{:.6}, {:.6}]",
                    a + b * q,
                    a_upper + b_upper * q
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_pass_their_bound_checks() {
        Potential::quadratic(1.0, 2, MatrixDomain::General).unwrap();
        Potential::quadratic(0.5, 1, MatrixDomain::SelfAdjoint).unwrap();
        Potential::quartic(0.1).unwrap();
        Potential::quartic(0.5).unwrap();
    }

    #[test]
    fn false_bounds_are_rejected() {
        let bad = Bounds { a: 0.0, b: 1.0, a_upper: 0.0, b_upper: 1.5 };
        assert!(Potential::parse("2 * tr.re(x1 x1*)", bad, MatrixDomain::General).is_err());
        let inverted = Bounds { a: 0.0, b: 1.0, a_upper: 0.0, b_upper: 0.5 };
        assert!(Potential::parse("tr.re(x1 x1*)", inverted, MatrixDomain::General).is_err());
        let flat = Bounds { a: 0.0, b: 0.0, a_upper: 0.0, b_upper: 1.0 };
        assert!(Potential::parse("tr.re(x1 x1*)", flat, MatrixDomain::General).is_err());
        assert!(Potential::parse(
            "sup{y1 in D(1)} tr.re(x1 y1)",
            Bounds { a: 0.0, b: 1.0, a_upper: 1.0, b_upper: 1.0 },
            MatrixDomain::General
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = Potential::quartic(0.1).unwrap();
        let q = Potential::from_json(&p.to_json()).unwrap();
        assert_eq!(q.domain(), MatrixDomain::SelfAdjoint);
        assert_eq!(q.bounds(), p.bounds());
        let src = r#"{"formula": "tr.re(x1 x1*) + tr.re(x2 x2*)", "bounds": {"a": 0, "b": 1, "A": 0, "B": 1}}"#;
        assert_eq!(Potential::from_json(src).unwrap().d(), 2);
        let short = src.replace("}}", "}, \"d\": 1}");
        assert!(matches!(Potential::from_json(&short), Err(Error::VariableOutOfRange { index: 2, d: 1 })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = RngStream::new(3, 3);
        assert!(Potential::quartic(0.1).unwrap().gradient_check(6, &s).unwrap() < 1e-6);
        assert!(Potential::quadratic(1.0, 2, MatrixDomain::General).unwrap().gradient_check(6, &s).unwrap() < 1e-6);
    }

    #[test]
    fn self_adjoint_gradient_is_hermitian() {
        let p = Potential::quartic(0.2).unwrap();
        let x = p.sample_domain(5, 1.0, &mut RngStream::new(1, 1).rng());
        let (_, g) = p.value_grad(&x).unwrap();
        assert_eq!(g.get(0).hermitian_defect(), 0.0);
    }
}
