use std::collections::BTreeSet;
use std::fmt;

use super::poly::StarPolynomial;
use super::word::Var;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantKind {
    Sup,
    Inf,
}

/// Real-valued trace formula.
///
/// Basic formulas are `Re tr(p)` / `Im tr(p)` for a *-polynomial `p`. The
/// connectives are constants, sums, products, scalar multiples, `max`, `min`,
/// `abs` and `sqrt` (of the nonnegative part); affine maps are sums of scalar
/// multiples and constants. Quantifiers range over the operator-norm ball of
/// the given radius in one bound variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Basic { part: Part, poly: StarPolynomial },
    Const(f64),
    Sum(Vec<Formula>),
    Product(Vec<Formula>),
    Scale(f64, Box<Formula>),
    Max(Vec<Formula>),
    Min(Vec<Formula>),
    Abs(Box<Formula>),
    Sqrt(Box<Formula>),
    Quant { kind: QuantKind, var: usize, radius: f64, body: Box<Formula> },
}

/// Default cap on quantifier nesting.
pub const DEFAULT_MAX_DEPTH: usize = 2;

impl Formula {
    pub fn re_tr(poly: StarPolynomial) -> Self {
        Formula::Basic { part: Part::Re, poly }
    }

    pub fn im_tr(poly: StarPolynomial) -> Self {
        Formula::Basic { part: Part::Im, poly }
    }

    pub fn sup(var: usize, radius: f64, body: Formula) -> Self {
        Formula::Quant { kind: QuantKind::Sup, var, radius, body: Box::new(body) }
    }

    pub fn inf(var: usize, radius: f64, body: Formula) -> Self {
        Formula::Quant { kind: QuantKind::Inf, var, radius, body: Box::new(body) }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Basic { .. } | Formula::Const(_) => vec![],
            Formula::Sum(c) | Formula::Product(c) | Formula::Max(c) | Formula::Min(c) => c.iter().collect(),
            Formula::Scale(_, b) | Formula::Abs(b) | Formula::Sqrt(b) => vec![b.as_ref()],
            Formula::Quant { body, .. } => vec![body.as_ref()],
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        !matches!(self, Formula::Quant { .. }) && self.children().iter().all(|c| c.is_quantifier_free())
    }

    pub fn quantifier_depth(&self) -> usize {
        let inner = self.children().iter().map(|c| c.quantifier_depth()).max().unwrap_or(0);
        match self {
            Formula::Quant { .. } => inner + 1,
            _ => inner,
        }
    }

    /// Number of quantifier nodes, counted in pre-order.
    pub fn quantifier_count(&self) -> usize {
        let own = usize::from(matches!(self, Formula::Quant { .. }));
        own + self.children().iter().map(|c| c.quantifier_count()).sum::<usize>()
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        if let Formula::Basic { poly, .. } = self {
            out.extend(poly.vars());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Free variable indices (the `x_i` that occur).
    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut all = BTreeSet::new();
        self.collect_vars(&mut all);
        all.into_iter()
            .filter_map(|v| match v {
                Var::Free(i) => Some(i),
                Var::Bound(_) => None,
            })
            .collect()
    }

    pub fn max_free_index(&self) -> usize {
        self.free_vars().into_iter().max().unwrap_or(0)
    }

    /// Checks radii, scoping and distinctness of bound variables, and the
    /// nesting cap.
    pub fn validate(&self, max_depth: usize) -> Result<()> {
        if self.quantifier_depth() > max_depth {
            return Err(Error::InvalidArgument(format!(
                "quantifier depth {} exceeds the configured maximum {max_depth}",
                self.quantifier_depth()
            )));
        }
        self.validate_scope(&mut Vec::new(), &mut BTreeSet::new())
    }

    fn validate_scope(&self, in_scope: &mut Vec<usize>, seen: &mut BTreeSet<usize>) -> Result<()> {
        match self {
            Formula::Basic { poly, .. } => {
                for v in poly.vars() {
                    if let Var::Bound(k) = v {
                        if !in_scope.contains(&k) {
                            return Err(Error::InvalidArgument(format!("bound variable y{k} used outside its quantifier")));
                        }
                    }
                }
                Ok(())
            }
            Formula::Const(c) | Formula::Scale(c, _) if !c.is_finite() => {
                Err(Error::InvalidArgument("non-finite constant in formula".into()))
            }
            Formula::Quant { var, radius, body, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidArgument(format!("quantifier radius must be positive, got {radius}")));
                }
                if !seen.insert(*var) {
                    return Err(Error::InvalidArgument(format!("bound variable y{var} is quantified twice")));
                }
                in_scope.push(*var);
                let r = body.validate_scope(in_scope, seen);
                in_scope.pop();
                r
            }
            Formula::Sum(c) | Formula::Product(c) | Formula::Max(c) | Formula::Min(c) if c.is_empty() => {
                Err(Error::InvalidArgument("connective with no arguments".into()))
            }
            _ => self.children().into_iter().try_for_each(|c| c.validate_scope(in_scope, seen)),
        }
    }

    /// Alpha-renaming of a bound variable.
    pub fn rename_bound(&self, from: usize, to: usize) -> Formula {
        let (f, t) = (Var::Bound(from), Var::Bound(to));
        let map = |c: &Formula| c.rename_bound(from, to);
        match self {
            Formula::Basic { part, poly } => Formula::Basic { part: *part, poly: poly.rename(f, t) },
            Formula::Const(c) => Formula::Const(*c),
            Formula::Sum(c) => Formula::Sum(c.iter().map(map).collect()),
            Formula::Product(c) => Formula::Product(c.iter().map(map).collect()),
            Formula::Max(c) => Formula::Max(c.iter().map(map).collect()),
            Formula::Min(c) => Formula::Min(c.iter().map(map).collect()),
            Formula::Scale(s, b) => Formula::Scale(*s, Box::new(map(b))),
            Formula::Abs(b) => Formula::Abs(Box::new(map(b))),
            Formula::Sqrt(b) => Formula::Sqrt(Box::new(map(b))),
            Formula::Quant { kind, var, radius, body } => Formula::Quant {
                kind: *kind,
                var: if *var == from { to } else { *var },
                radius: *radius,
                body: Box::new(map(body)),
            },
        }
    }

    /// Renames every free variable `x_i` to `x_{i+offset}`, as when the
    /// formula is moved to the second factor of a joined tuple.
    pub fn shift_free(&self, offset: usize) -> Formula {
        let map = |c: &Formula| c.shift_free(offset);
        match self {
            Formula::Basic { part, poly } => Formula::Basic { part: *part, poly: poly.shift_free(offset) },
            Formula::Const(c) => Formula::Const(*c),
            Formula::Sum(c) => Formula::Sum(c.iter().map(map).collect()),
            Formula::Product(c) => Formula::Product(c.iter().map(map).collect()),
            Formula::Max(c) => Formula::Max(c.iter().map(map).collect()),
            Formula::Min(c) => Formula::Min(c.iter().map(map).collect()),
            Formula::Scale(s, b) => Formula::Scale(*s, Box::new(map(b))),
            Formula::Abs(b) => Formula::Abs(Box::new(map(b))),
            Formula::Sqrt(b) => Formula::Sqrt(Box::new(map(b))),
            Formula::Quant { kind, var, radius, body } => {
                Formula::Quant { kind: *kind, var: *var, radius: *radius, body: Box::new(map(body)) }
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Formula], sep: &str) -> fmt::Result {
    for (k, c) in items.iter().enumerate() {
        if k > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    /// Canonical text form; `parse_formula` inverts it exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Basic { part: Part::Re, poly } => write!(f, "tr.re({poly})"),
            Formula::Basic { part: Part::Im, poly } => write!(f, "tr.im({poly})"),
            Formula::Const(c) => write!(f, "{c:?}"),
            Formula::Sum(c) => {
                f.write_str("(")?;
                write_list(f, c, " + ")?;
                f.write_str(")")
            }
            Formula::Product(c) => {
                f.write_str("(")?;
                for (k, item) in c.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" * ")?;
                    }
                    // a bare leading constant would read back as a scalar multiple
                    match item {
                        Formula::Const(v) => write!(f, "({v:?})")?,
                        other => write!(f, "{other}")?,
                    }
                }
                f.write_str(")")
            }
            Formula::Scale(s, b) => write!(f, "({s:?} * {b})"),
            Formula::Max(c) => {
                f.write_str("max(")?;
                write_list(f, c, ", ")?;
                f.write_str(")")
            }
            Formula::Min(c) => {
                f.write_str("min(")?;
                write_list(f, c, ", ")?;
                f.write_str(")")
            }
            Formula::Abs(b) => write!(f, "abs({b})"),
            Formula::Sqrt(b) => write!(f, "sqrt({b})"),
            Formula::Quant { kind, var, radius, body } => {
                let k = match kind {
                    QuantKind::Sup => "sup",
                    QuantKind::Inf => "inf",
                };
                write!(f, "{k}{{y{var} in D({radius:?})}} {body}")
            }
        }
    }
}
