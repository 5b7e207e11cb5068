//! Dense storage of functionals on words of bounded length.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, MatrixTuple};
use crate::ncpoly::{Letter, StarWord, Var};

/// Default word-length bound.
pub const DEFAULT_MAX_LEN: usize = 6;
/// Hard cap on the word-length bound.
pub const MAX_LEN_CAP: usize = 10;
/// Largest table allowed, in words.
const MAX_WORDS: u64 = 1 << 26;

/// Values indexed by words over the alphabet `x1, x1*, …, xd, xd*`, stored
/// length-major with each length block in lexicographic order of alphabet
/// indices.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct WordTable {
    pub d: usize,
    pub max_len: usize,
    /// `offsets[l]` is the index of the first word of length `l`.
    pub offsets: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl WordTable {
    pub fn zeros(d: usize, max_len: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("a moment table needs at least one variable".into()));
        }
        if max_len > MAX_LEN_CAP {
            return Err(Error::InvalidArgument(format!("max_len {max_len} exceeds the cap {MAX_LEN_CAP}")));
        }
        let a = 2 * d as u64;
        let mut offsets = Vec::with_capacity(max_len + 2);
        let mut total = 0u64;
        let mut block = 1u64;
        for _ in 0..=max_len {
            offsets.push(total as usize);
            total += block;
            if total > MAX_WORDS {
                return Err(Error::InvalidArgument(format!(
                    "{d} variables up to length {max_len} exceed {MAX_WORDS} words"
                )));
            }
            block *= a;
        }
        offsets.push(total as usize);
        Ok(Self { d, max_len, offsets, values: vec![Complex64::new(0.0, 0.0); total as usize] })
    }

    pub fn alphabet(&self) -> usize {
        2 * self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn index(&self, letters: &[usize]) -> usize {
        let a = self.alphabet();
        self.offsets[letters.len()] + letters.iter().fold(0usize, |acc, &l| acc * a + l)
    }

    /// Alphabet indices of the word stored at `idx`.
    pub fn letters(&self, idx: usize) -> Vec<usize> {
        let len = self.offsets.partition_point(|&o| o <= idx) - 1;
        let a = self.alphabet();
        let mut rest = idx - self.offsets[len];
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = rest % a;
            rest /= a;
        }
        out
    }

    pub fn word_index(&self, w: &StarWord) -> Result<usize> {
        if w.len() > self.max_len {
            return Err(Error::InvalidArgument(format!("word `{w}` is longer than max_len {}", self.max_len)));
        }
        let mut letters = Vec::with_capacity(w.len());
        for l in w.letters() {
            match l.var {
                Var::Free(i) if i >= 1 && i <= self.d => letters.push(l.alphabet_index().expect("free letter")),
                Var::Free(i) => return Err(Error::VariableOutOfRange { index: i, d: self.d }),
                Var::Bound(_) => return Err(Error::InvalidArgument(format!("word `{w}` has bound variables"))),
            }
        }
        Ok(self.index(&letters))
    }

    pub fn star_word(letters: &[usize]) -> StarWord {
        StarWord(letters.iter().map(|&k| Letter::from_alphabet_index(k)).collect())
    }

    /// Index range of words of length `l`.
    pub fn layer(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    /// Index of the adjoint word.
    pub fn adjoint_index(&self, letters: &[usize]) -> usize {
        let adj: Vec<usize> = letters.iter().rev().map(|&k| k ^ 1).collect();
        self.index(&adj)
    }
}

/// Truncated *-moments `w ↦ τ(w)` of a tuple, for all words of length at
/// most `max_len`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub(crate) table: WordTable,
}

/// Free cumulants over the same word set as a [`MomentVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantVector {
    pub(crate) table: WordTable,
}

macro_rules! word_access {
    ($t:ty) => {
        impl $t {
            pub fn d(&self) -> usize {
                self.table.d
            }

            pub fn max_len(&self) -> usize {
                self.table.max_len
            }

            pub fn num_words(&self) -> usize {
                self.table.len()
            }

            pub fn get(&self, w: &StarWord) -> Result<Complex64> {
                Ok(self.table.values[self.table.word_index(w)?])
            }

            /// Value at a word given by alphabet indices (`2(i-1)` for `x_i`,
            /// `2(i-1)+1` for `x_i*`).
            pub fn get_letters(&self, letters: &[usize]) -> Complex64 {
                self.table.values[self.table.index(letters)]
            }

            pub fn set(&mut self, w: &StarWord, v: Complex64) -> Result<()> {
                let i = self.table.word_index(w)?;
                self.table.values[i] = v;
                Ok(())
            }

            /// All `(word, value)` pairs in storage order.
            pub fn iter(&self) -> impl Iterator<Item = (StarWord, Complex64)> + '_ {
                (0..self.table.len()).map(|i| (WordTable::star_word(&self.table.letters(i)), self.table.values[i]))
            }

            /// Largest entrywise deviation; errors on shape mismatch.
            pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
                if self.table.d != other.table.d || self.table.max_len != other.table.max_len {
                    return Err(Error::DimensionMismatch(format!(
                        "tables over (d={}, len {}) and (d={}, len {})",
                        self.table.d, self.table.max_len, other.table.d, other.table.max_len
                    )));
                }
                Ok(self.table.values.iter().zip(&other.table.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
            }

            /// The same functional restricted to words of length `≤ max_len`.
            pub fn truncate(&self, max_len: usize) -> Result<Self> {
                if max_len > self.table.max_len {
                    return Err(Error::InvalidArgument(format!(
                        "cannot extend length bound {} to {max_len}",
                        self.table.max_len
                    )));
                }
                let mut table = WordTable::zeros(self.table.d, max_len)?;
                let end = table.len();
                table.values.copy_from_slice(&self.table.values[..end]);
                Ok(Self { table })
            }
        }
    };
}

word_access!(MomentVector);
word_access!(CumulantVector);

impl CumulantVector {
    pub fn zeros(d: usize, max_len: usize) -> Result<Self> {
        Ok(Self { table: WordTable::zeros(d, max_len)? })
    }
}

impl MomentVector {
    /// The law of the zero tuple: 1 on the empty word, 0 elsewhere.
    pub fn unit(d: usize, max_len: usize) -> Result<Self> {
        let mut table = WordTable::zeros(d, max_len)?;
        table.values[0] = Complex64::new(1.0, 0.0);
        Ok(Self { table })
    }

    /// Law of one self-adjoint variable from its moments `m_0 = 1, m_1, …`.
    pub fn self_adjoint_univariate(moments: &[f64]) -> Result<Self> {
        if moments.is_empty() || (moments[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("univariate moments must start with m_0 = 1".into()));
        }
        let mut table = WordTable::zeros(1, moments.len() - 1)?;
        for l in 0..moments.len() {
            for i in table.layer(l) {
                table.values[i] = Complex64::new(moments[l], 0.0);
            }
        }
        Ok(Self { table })
    }

    /// `(m_0, …, m_max_len)` of a single self-adjoint variable. Errors when
    /// the table is not the law of a self-adjoint element (non-real values or
    /// dependence on the star pattern).
    pub fn univariate_moments(&self, tol: f64) -> Result<Vec<f64>> {
        if self.table.d != 1 {
            return Err(Error::InvalidArgument(format!("expected one variable, got {}", self.table.d)));
        }
        let mut out = Vec::with_capacity(self.table.max_len + 1);
        for l in 0..=self.table.max_len {
            let base = self.table.values[self.table.offsets[l]];
            for i in self.table.layer(l) {
                let v = self.table.values[i];
                if (v - base).norm() > tol || v.im.abs() > tol {
                    let w = WordTable::star_word(&self.table.letters(i));
                    return Err(Error::InvalidArgument(format!(
                        "not a self-adjoint law: value {v} at `{w}` (reference {base})"
                    )));
                }
            }
            out.push(base.re);
        }
        Ok(out)
    }

    /// Normalized word traces `tr_n(w(X))` of a matrix tuple.
    pub fn from_tuple(x: &MatrixTuple, max_len: usize) -> Result<Self> {
        let mut table = WordTable::zeros(x.d(), max_len)?;
        let n = x.n();
        let alphabet: Vec<ComplexMatrix> =
            x.mats().iter().flat_map(|m| [m.clone(), m.adjoint()]).collect();
        // products for every word up to half the length bound
        let half = max_len.div_ceil(2);
        let half_count = table.offsets[half + 1];
        let mut prods: Vec<ComplexMatrix> = Vec::with_capacity(half_count);
        prods.push(ComplexMatrix::identity(n));
        for l in 1..=half {
            let layer: Vec<ComplexMatrix> = table
                .layer(l)
                .into_par_iter()
                .map(|i| {
                    let letters = table.letters(i);
                    let prefix = table.index(&letters[..l - 1]);
                    prods[prefix].matmul(&alphabet[letters[l - 1]])
                })
                .collect();
            prods.extend(layer);
        }
        let values: Vec<Complex64> = (0..table.len())
            .into_par_iter()
            .map(|i| {
                let letters = table.letters(i);
                let split = letters.len().min(half);
                let left = table.index(&letters[..split]);
                let right = table.index(&letters[split..]);
                prods[left].trace_of_product(&prods[right])
            })
            .collect();
        table.values = values;
        Ok(Self { table })
    }

    /// Checks unitality, conjugate symmetry and traciality within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let t = &self.table;
        if (t.values[0] - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidArgument(format!("value at the unit word is {}, not 1", t.values[0])));
        }
        for i in 0..t.len() {
            let letters = t.letters(i);
            let v = t.values[i];
            let adj = t.values[t.adjoint_index(&letters)];
            if (v - adj.conj()).norm() > tol {
                return Err(Error::InvalidArgument(format!(
                    "conjugate symmetry fails at `{}`",
                    WordTable::star_word(&letters)
                )));
            }
            if letters.len() > 1 {
                let mut rotated = letters[1..].to_vec();
                rotated.push(letters[0]);
                if (v - t.values[t.index(&rotated)]).norm() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "traciality fails at `{}`",
                        WordTable::star_word(&letters)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    d: usize,
    max_len: usize,
    values: BTreeMap<String, [f64; 2]>,
}

fn table_to_file(t: &WordTable) -> TableFile {
    let values = (0..t.len())
        .map(|i| (WordTable::star_word(&t.letters(i)).to_string(), [t.values[i].re, t.values[i].im]))
        .collect();
    TableFile { d: t.d, max_len: t.max_len, values }
}

fn table_from_file(f: TableFile) -> Result<WordTable> {
    let mut t = WordTable::zeros(f.d, f.max_len)?;
    let mut seen = vec![false; t.len()];
    for (k, [re, im]) in &f.values {
        let w = StarWord::parse(k)?;
        let i = t.word_index(&w)?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::NonFinite(format!("value at `{k}`")));
        }
        t.values[i] = Complex64::new(*re, *im);
        seen[i] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "no value for word `{}`",
            WordTable::star_word(&t.letters(missing))
        )));
    }
    Ok(t)
}

/// Tolerance for the invariants checked when reading moment files.
pub const FILE_INVARIANT_TOL: f64 = 1e-8;

impl Serialize for MomentVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        table_to_file(&self.table).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let table = table_from_file(TableFile::deserialize(d)?).map_err(serde::de::Error::custom)?;
        let mv = MomentVector { table };
        mv.check_invariants(FILE_INVARIANT_TOL).map_err(serde::de::Error::custom)?;
        Ok(mv)
    }
}

impl Serialize for CumulantVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        table_to_file(&self.table).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CumulantVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let table = table_from_file(TableFile::deserialize(d)?).map_err(serde::de::Error::custom)?;
        Ok(CumulantVector { table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_ginibre, RngStream};

    #[test]
    fn indexing_round_trips() {
        let t = WordTable::zeros(2, 4).unwrap();
        assert_eq!(t.len(), 1 + 4 + 16 + 64 + 256);
        for i in 0..t.len() {
            assert_eq!(t.index(&t.letters(i)), i);
        }
        let w = StarWord::parse("x2* x1").unwrap();
        assert_eq!(t.word_index(&w).unwrap(), t.index(&[3, 0]));
        assert!(t.word_index(&StarWord::parse("x3").unwrap()).is_err());
    }

    #[test]
    fn traces_of_a_tuple() {
        let x = sample_ginibre(5, 2, &mut RngStream::new(1, 2).rng());
        let mv = MomentVector::from_tuple(&x, 5).unwrap();
        mv.check_invariants(1e-12).unwrap();
        let w = StarWord::parse("x1 x2* x2 x1* x1").unwrap();
        let direct = crate::ncpoly::eval_polynomial(&crate::ncpoly::StarPolynomial::monomial(w.clone(), Complex64::new(1.0, 0.0)), &x)
            .unwrap()
            .normalized_trace();
        assert!((mv.get(&w).unwrap() - direct).norm() < 1e-13);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let x = sample_ginibre(3, 1, &mut RngStream::new(1, 3).rng());
        let mv = MomentVector::from_tuple(&x, 3).unwrap();
        let s = serde_json::to_string(&mv).unwrap();
        assert!(s.contains("\"x1 x1*\""));
        assert!(s.contains("\"\":[1.0"));
        let back: MomentVector = serde_json::from_str(&s).unwrap();
        assert!(back.max_abs_diff(&mv).unwrap() < 1e-15);

        let broken = s.replacen("\"\":[1.0", "\"\":[2.0", 1);
        assert!(serde_json::from_str::<MomentVector>(&broken).is_err());
        let missing = r#"{"d":1,"max_len":1,"values":{"":[1,0],"x1":[0,0]}}"#;
        assert!(serde_json::from_str::<MomentVector>(missing).is_err());
    }

    #[test]
    fn univariate_views() {
        let mv = MomentVector::self_adjoint_univariate(&[1.0, 0.0, 1.0, 0.0, 2.0]).unwrap();
        assert_eq!(mv.get(&StarWord::parse("x1 x1* x1 x1").unwrap()).unwrap().re, 2.0);
        assert_eq!(mv.univariate_moments(0.0).unwrap(), vec![1.0, 0.0, 1.0, 0.0, 2.0]);
        let g = sample_ginibre(3, 1, &mut RngStream::new(0, 0).rng());
        assert!(MomentVector::from_tuple(&g, 2).unwrap().univariate_moments(1e-9).is_err());
    }
}
