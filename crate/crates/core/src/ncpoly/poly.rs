use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::word::{Letter, StarWord, Var};

/// A non-commutative *-polynomial: finitely many words with nonzero complex
/// coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StarPolynomial {
    terms: BTreeMap<StarWord, Complex64>,
}

impl StarPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(word: StarWord, coef: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(word, coef);
        p
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(StarWord::unit(), c)
    }

    /// Single word with coefficient one, e.g. `word(&[(1, false), (1, true)])` is `x1 x1*`.
    pub fn word(letters: &[(usize, bool)]) -> Self {
        let w = StarWord(letters.iter().map(|&(i, s)| Letter::free(i, s)).collect());
        Self::monomial(w, Complex64::new(1.0, 0.0))
    }

    pub fn add_term(&mut self, word: StarWord, coef: Complex64) {
        let v = self.terms.get(&word).copied().unwrap_or_default() + coef;
        if v == Complex64::new(0.0, 0.0) {
            self.terms.remove(&word);
        } else {
            self.terms.insert(word, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&StarWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(StarWord::len).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        out
    }

    /// `p^*`: adjoint words with conjugated coefficients.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            out.add_term(w.adjoint(), c.conj());
        }
        out
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.terms.keys().flat_map(|w| w.letters().iter().map(|l| l.var))
    }

    pub fn max_free_index(&self) -> usize {
        self.terms.keys().map(StarWord::max_free_index).max().unwrap_or(0)
    }

    /// Renames every occurrence of `from` to `to`.
    pub fn rename(&self, from: Var, to: Var) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            let letters = w
                .letters()
                .iter()
                .map(|l| if l.var == from { Letter { var: to, ..*l } } else { *l })
                .collect();
            out.add_term(StarWord(letters), *c);
        }
        out
    }

    /// Renames every free variable `x_i` to `x_{i+offset}`.
    pub fn shift_free(&self, offset: usize) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            let letters = w
                .letters()
                .iter()
                .map(|l| match l.var {
                    Var::Free(i) => Letter { var: Var::Free(i + offset), ..*l },
                    Var::Bound(_) => *l,
                })
                .collect();
            out.add_term(StarWord(letters), *c);
        }
        out
    }
}

fn fmt_coef_magnitude(c: Complex64) -> String {
    format!("{:?}", c.re.abs())
}

impl fmt::Display for StarPolynomial {
    /// Canonical text form, re-parseable by the formula parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0.0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            let real = c.im == 0.0;
            let negative = real && c.re.is_sign_negative();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if real {
                let unit = c.re.abs() == 1.0 && !w.is_empty();
                if !unit {
                    f.write_str(&fmt_coef_magnitude(*c))?;
                    if !w.is_empty() {
                        f.write_str(" ")?;
                    }
                }
            } else {
                let sign = if c.im.is_sign_negative() { '-' } else { '+' };
                write!(f, "({:?}{}{:?}i)", c.re, sign, c.im.abs())?;
                if !w.is_empty() {
                    f.write_str(" ")?;
                }
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}
