//! Text syntax for trace formulas.
//!
//! ```text
//! formula  := additive
//! additive := mult (('+' | '-') mult)*
//! mult     := unary ('*' unary)*
//! unary    := '-' unary | primary
//! primary  := number
//!           | 'tr.re' '(' poly ')' | 'tr.im' '(' poly ')'
//!           | ('max' | 'min') '(' formula (',' formula)* ')'
//!           | 'abs' '(' formula ')' | 'sqrt' '(' formula ')'
//!           | ('sup' | 'inf') '{' yK 'in' 'D' '(' number ')' '}' unary
//!           | '(' formula ')'
//! poly     := ['-'] product (('+' | '-') product)*
//! product  := factor+
//! factor   := number | number 'i' | letter | '(' poly ')' ['*']
//! letter   := ('x' | 'y') index ['*']
//! ```
//!
//! A product of exactly two factors whose first factor is a bare number is a
//! scalar multiple. A star written directly after a variable (`x1*`) is an
//! adjoint; outside `tr.re`/`tr.im` a free-standing `*` is multiplication,
//! inside it a `*` after a parenthesized polynomial is its adjoint.

use num_complex::Complex64;

use super::formula::{Formula, Part, QuantKind};
use super::poly::StarPolynomial;
use super::word::{Letter, StarWord, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Letter(Letter),
    Sym(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos, msg: msg.into() })
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek_char() {
            let start = self.pos;
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c.is_ascii_digit() || (c == '.' && self.src[start + 1..].starts_with(|d: char| d.is_ascii_digit())) {
                out.push((start, self.number()?));
            } else if c.is_ascii_alphabetic() {
                let end = self.src[start..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '.' || ch == '_'))
                    .map_or(self.src.len(), |k| start + k);
                let ident = &self.src[start..end];
                self.pos = end;
                out.push((start, self.classify(ident, start)?));
            } else if "+-*(),{}".contains(c) {
                self.pos += 1;
                out.push((start, Tok::Sym(c)));
            } else {
                return self.err(start, format!("unexpected character `{c}`"));
            }
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut e = end + 1;
            if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                e += 1;
            }
            if e < bytes.len() && bytes[e].is_ascii_digit() {
                while e < bytes.len() && bytes[e].is_ascii_digit() {
                    e += 1;
                }
                end = e;
            }
        }
        let value: f64 = match self.src[start..end].parse() {
            Ok(v) => v,
            Err(_) => return self.err(start, format!("bad number `{}`", &self.src[start..end])),
        };
        self.pos = end;
        // `2i` / `0.5i` is an imaginary literal
        if self.src[end..].starts_with('i')
            && !self.src[end + 1..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '.')
        {
            self.pos += 1;
            return Ok(Tok::Imag(value));
        }
        Ok(Tok::Num(value))
    }

    fn classify(&mut self, ident: &str, start: usize) -> Result<Tok> {
        let mut chars = ident.chars();
        let head = chars.next();
        let rest = chars.as_str();
        if matches!(head, Some('x' | 'y')) && !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
            let idx: usize = rest.parse().map_err(|_| Error::Parse { pos: start, msg: "bad index".into() })?;
            if idx == 0 {
                return self.err(start, "variable indices start at 1");
            }
            let var = if head == Some('x') { Var::Free(idx) } else { Var::Bound(idx) };
            let star = self.peek_char() == Some('*');
            if star {
                self.pos += 1;
            }
            return Ok(Tok::Letter(Letter { var, star }));
        }
        Ok(Tok::Ident(ident.to_string()))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.at += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{c}`")),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn additive(&mut self) -> Result<Formula> {
        let mut items = vec![self.mult()?.0];
        loop {
            if self.eat_sym('+') {
                items.push(self.mult()?.0);
            } else if self.eat_sym('-') {
                let (f, _) = self.mult()?;
                items.push(match f {
                    Formula::Const(c) => Formula::Const(-c),
                    other => Formula::Scale(-1.0, Box::new(other)),
                });
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::Sum(items) })
    }

    /// Returns the formula and whether it is a bare number literal.
    fn mult(&mut self) -> Result<(Formula, bool)> {
        let first = self.unary()?;
        let mut items = vec![first];
        while self.eat_sym('*') {
            items.push(self.unary()?);
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        if items.len() == 2 && items[0].1 {
            let (rhs, _) = items.pop().unwrap();
            let (lhs, _) = items.pop().unwrap();
            if let Formula::Const(c) = lhs {
                return Ok((Formula::Scale(c, Box::new(rhs)), false));
            }
            unreachable!("bare literals are constants");
        }
        Ok((Formula::Product(items.into_iter().map(|x| x.0).collect()), false))
    }

    fn unary(&mut self) -> Result<(Formula, bool)> {
        if self.eat_sym('-') {
            if let Some(Tok::Num(v)) = self.peek().cloned() {
                self.at += 1;
                return Ok((Formula::Const(-v), true));
            }
            let (inner, _) = self.unary()?;
            return Ok((Formula::Scale(-1.0, Box::new(inner)), false));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(Formula, bool)> {
        let start = self.pos();
        match self.next() {
            Some(Tok::Num(v)) => Ok((Formula::Const(v), true)),
            Some(Tok::Sym('(')) => {
                let f = self.additive()?;
                self.expect_sym(')')?;
                Ok((f, false))
            }
            Some(Tok::Ident(name)) => {
                let f = match name.as_str() {
                    "tr.re" | "tr.im" => {
                        self.expect_sym('(')?;
                        let poly = self.poly()?;
                        self.expect_sym(')')?;
                        let part = if name == "tr.re" { Part::Re } else { Part::Im };
                        Formula::Basic { part, poly }
                    }
                    "max" | "min" => {
                        self.expect_sym('(')?;
                        let mut args = vec![self.additive()?];
                        while self.eat_sym(',') {
                            args.push(self.additive()?);
                        }
                        self.expect_sym(')')?;
                        if name == "max" { Formula::Max(args) } else { Formula::Min(args) }
                    }
                    "abs" | "sqrt" => {
                        self.expect_sym('(')?;
                        let arg = Box::new(self.additive()?);
                        self.expect_sym(')')?;
                        if name == "abs" { Formula::Abs(arg) } else { Formula::Sqrt(arg) }
                    }
                    "sup" | "inf" => self.quantifier(if name == "sup" { QuantKind::Sup } else { QuantKind::Inf })?,
                    other => return Err(Error::Parse { pos: start, msg: format!("unknown name `{other}`") }),
                };
                Ok((f, false))
            }
            Some(Tok::Letter(l)) => Err(Error::Parse {
                pos: start,
                msg: format!("variable `{l}` must appear inside tr.re(...) or tr.im(...)"),
            }),
            Some(t) => Err(Error::Parse { pos: start, msg: format!("unexpected token {t:?}") }),
            None => self.err("unexpected end of input"),
        }
    }

    fn quantifier(&mut self, kind: QuantKind) -> Result<Formula> {
        self.expect_sym('{')?;
        let var = match self.next() {
            Some(Tok::Letter(Letter { var: Var::Bound(k), star: false })) => k,
            _ => {
                self.at -= 1;
                return self.err("quantified variable must be a bound variable `yK`");
            }
        };
        match self.next() {
            Some(Tok::Ident(s)) if s == "in" => {}
            _ => {
                self.at -= 1;
                return self.err("expected `in`");
            }
        }
        match self.next() {
            Some(Tok::Ident(s)) if s == "D" => {}
            _ => {
                self.at -= 1;
                return self.err("expected `D(radius)`");
            }
        }
        self.expect_sym('(')?;
        let radius = match self.next() {
            Some(Tok::Num(r)) => r,
            _ => {
                self.at -= 1;
                return self.err("expected a radius");
            }
        };
        self.expect_sym(')')?;
        self.expect_sym('}')?;
        let (body, _) = self.unary()?;
        Ok(Formula::Quant { kind, var, radius, body: Box::new(body) })
    }

    fn poly(&mut self) -> Result<StarPolynomial> {
        let mut p = StarPolynomial::zero();
        let mut sign = if self.eat_sym('-') { -1.0 } else { 1.0 };
        loop {
            let term = self.poly_product()?;
            p = p.add(&term.scale(Complex64::new(sign, 0.0)));
            if self.eat_sym('+') {
                sign = 1.0;
            } else if self.eat_sym('-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(p)
    }

    /// Juxtaposed factors: numbers, imaginary literals, letters and
    /// parenthesized polynomials (optionally starred).
    fn poly_product(&mut self) -> Result<StarPolynomial> {
        let mut acc: Option<StarPolynomial> = None;
        loop {
            let factor = match self.peek().cloned() {
                Some(Tok::Num(v)) => {
                    self.at += 1;
                    StarPolynomial::constant(Complex64::new(v, 0.0))
                }
                Some(Tok::Imag(v)) => {
                    self.at += 1;
                    StarPolynomial::constant(Complex64::new(0.0, v))
                }
                Some(Tok::Letter(l)) => {
                    self.at += 1;
                    StarPolynomial::monomial(StarWord(vec![l]), Complex64::new(1.0, 0.0))
                }
                Some(Tok::Sym('(')) => {
                    self.at += 1;
                    let inner = self.poly()?;
                    self.expect_sym(')')?;
                    if self.eat_sym('*') {
                        inner.adjoint()
                    } else {
                        inner
                    }
                }
                _ => break,
            };
            acc = Some(match acc {
                None => factor,
                Some(a) => a.mul(&factor),
            });
        }
        match acc {
            Some(p) => Ok(p),
            None => self.err("expected a polynomial term"),
        }
    }
}

/// Parses a formula in the text syntax described in the module docs.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let toks = Lexer { src, pos: 0 }.tokens()?;
    let mut p = Parser { toks, at: 0, end: src.len() };
    let f = p.additive()?;
    if p.at < p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}
