//! Neighborhood specifications.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::MatrixDomain;
use crate::ncpoly::{parse_formula, Formula, DEFAULT_MAX_DEPTH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    QuantifierFree,
    Full,
    /// The last `witness_vars` variables are existentially quantified: a
    /// tuple of the first `d - witness_vars` belongs when some completion
    /// satisfies the constraints.
    Existential,
}

/// `|φ(X) - target| < tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    #[serde(serialize_with = "formula_to_string", deserialize_with = "formula_from_string")]
    pub formula: Formula,
    pub target: f64,
    pub tol: f64,
}

fn formula_to_string<S: Serializer>(f: &Formula, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

fn formula_from_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Formula, D::Error> {
    let src = String::deserialize(d)?;
    parse_formula(&src).map_err(serde::de::Error::custom)
}

impl Constraint {
    pub fn new(formula: &str, target: f64, tol: f64) -> Result<Self> {
        Ok(Self { formula: parse_formula(formula)?, target, tol })
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_depth() -> usize {
    DEFAULT_MAX_DEPTH
}

/// A basic neighborhood intersected with the ambient ball `D_r^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSpec {
    pub d: usize,
    pub r: f64,
    pub kind: SpecKind,
    pub constraints: Vec<Constraint>,
    /// Matrix space the microstates live in.
    #[serde(default)]
    pub domain: MatrixDomain,
    /// Root mean square `‖X_j‖₂` of the Gaussian importance proposal.
    #[serde(default = "default_scale")]
    pub proposal_scale: f64,
    /// Trailing existential variables (only for `kind = existential`).
    #[serde(default)]
    pub witness_vars: usize,
    #[serde(default = "default_depth")]
    pub max_quantifier_depth: usize,
}

impl NeighborhoodSpec {
    pub fn new(d: usize, r: f64, kind: SpecKind, constraints: Vec<Constraint>) -> Result<Self> {
        let spec = Self {
            d,
            r,
            kind,
            constraints,
            domain: MatrixDomain::General,
            proposal_scale: 1.0,
            witness_vars: 0,
            max_quantifier_depth: DEFAULT_MAX_DEPTH,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_domain(mut self, domain: MatrixDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_proposal_scale(mut self, scale: f64) -> Self {
        self.proposal_scale = scale;
        self
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(src)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Number of variables the sampled tuples carry.
    pub fn sampled_vars(&self) -> usize {
        self.d - self.witness_vars
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.constraints.iter().all(|c| c.formula.is_quantifier_free())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d == 0 {
            return bad("a neighborhood needs d >= 1".into());
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("ambient radius must be positive, got {}", self.r));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return bad(format!("proposal_scale must be positive, got {}", self.proposal_scale));
        }
        if self.constraints.is_empty() {
            return bad("constraint list is empty".into());
        }
        match self.kind {
            SpecKind::Existential if self.witness_vars == 0 || self.witness_vars >= self.d => {
                return bad(format!("existential spec needs 1 <= witness_vars < d, got {}", self.witness_vars));
            }
            SpecKind::QuantifierFree | SpecKind::Full if self.witness_vars != 0 => {
                return bad("witness_vars is only meaningful for existential specs".into());
            }
            _ => {}
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !(c.tol > 0.0 && c.tol.is_finite()) || !c.target.is_finite() {
                return bad(format!("constraint {k}: tol must be positive and target finite"));
            }
            if self.kind == SpecKind::QuantifierFree && !c.formula.is_quantifier_free() {
                return bad(format!("constraint {k} has quantifiers but the spec is quantifier_free"));
            }
            c.formula.validate(self.max_quantifier_depth)?;
            if let Some(&i) = c.formula.free_vars().iter().find(|&&i| i > self.d) {
                return Err(Error::VariableOutOfRange { index: i, d: self.d });
            }
        }
        Ok(())
    }
}
