//! Non-commutative *-polynomials and trace formulas.

mod eval;
mod formula;
mod parse;
mod poly;
mod word;

pub use eval::{
    cyclic_gradient, eval_formula, eval_polynomial, value_and_gradient, EvalConfig, EvalDiagnostics, Evaluation,
    Gradient,
};
pub use formula::{Formula, Part, QuantKind, DEFAULT_MAX_DEPTH};
pub use parse::parse_formula;
pub use poly::StarPolynomial;
pub use word::{Letter, StarWord, Var};
