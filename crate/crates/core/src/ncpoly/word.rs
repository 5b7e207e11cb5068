use std::fmt;

/// A matrix variable: free variables `x1, x2, …` are the coordinates of the
/// evaluated tuple; bound variables `y1, y2, …` are introduced by quantifiers.
/// Indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Free(usize),
    Bound(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Free(i) => write!(f, "x{i}"),
            Var::Bound(i) => write!(f, "y{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub var: Var,
    pub star: bool,
}

impl Letter {
    pub fn free(i: usize, star: bool) -> Self {
        Self { var: Var::Free(i), star }
    }

    pub fn adjoint(self) -> Self {
        Self { star: !self.star, ..self }
    }

    /// Position in the alphabet `x1, x1*, x2, x2*, …` (free letters only).
    pub fn alphabet_index(self) -> Option<usize> {
        match self.var {
            Var::Free(i) => Some(2 * (i - 1) + usize::from(self.star)),
            Var::Bound(_) => None,
        }
    }

    pub fn from_alphabet_index(k: usize) -> Self {
        Self::free(k / 2 + 1, k % 2 == 1)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.var, if self.star { "*" } else { "" })
    }
}

/// A *-monomial; the empty word is the unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StarWord(pub Vec<Letter>);

impl StarWord {
    pub fn unit() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `w^*`: reversed, with every letter starred/unstarred.
    pub fn adjoint(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.adjoint()).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// Largest free-variable index, 0 if none.
    pub fn max_free_index(&self) -> usize {
        self.0
            .iter()
            .filter_map(|l| match l.var {
                Var::Free(i) => Some(i),
                Var::Bound(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Parses the space-separated form used in JSON files, e.g. `"x1 x2* x1"`.
    /// The empty string is the unit word.
    pub fn parse(s: &str) -> crate::error::Result<Self> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (body, star) = match tok.strip_suffix('*') {
                Some(b) => (b, true),
                None => (tok, false),
            };
            let var = match body.split_at(body.len().min(1)) {
                ("x", idx) => idx.parse::<usize>().ok().filter(|&i| i >= 1).map(Var::Free),
                ("y", idx) => idx.parse::<usize>().ok().filter(|&i| i >= 1).map(Var::Bound),
                _ => None,
            }
            .ok_or_else(|| crate::error::Error::Parse { pos: 0, msg: format!("bad letter `{tok}` in word `{s}`") })?;
            letters.push(Letter { var, star });
        }
        Ok(Self(letters))
    }
}

impl fmt::Display for StarWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}
