//! Word-trace comparison of two matrix tuples.
//!
//! Two tuples are unitarily conjugate iff every *-word has the same
//! normalized trace on both. Words are enumerated breadth first on the
//! block sum `X ⊕ Y`; only words whose block matrices are linearly
//! independent of the shorter ones are extended, since the trace difference
//! is linear in the block matrix.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, MatrixTuple};
use crate::ncpoly::{Letter, StarWord};

/// A trace difference above this counts as a mismatch.
pub const MISMATCH_TOL: f64 = 1e-8;
/// Relative residual below which a word matrix counts as dependent.
const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpechtVerdict {
    Equivalent,
    Distinct,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordMismatch {
    pub word: String,
    pub len: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpechtReport {
    pub verdict: SpechtVerdict,
    pub max_len: usize,
    pub sufficiency_bound: usize,
    /// Every word whose traces were compared, kept or not.
    pub words_checked: usize,
    /// Dimension of the span of word matrices reached.
    pub span_dim: usize,
    /// Length at which no new independent word appeared; all longer words
    /// then lie in the span already checked.
    pub stabilized_at: Option<usize>,
    pub first_mismatch: Option<WordMismatch>,
}

struct Node {
    letters: Vec<usize>,
    wx: ComplexMatrix,
    wy: ComplexMatrix,
}

/// Orthonormal basis of the span of `(w(X), w(Y))` pairs.
struct Span {
    basis: Vec<Vec<Complex64>>,
}

impl Span {
    /// Adds the pair when independent of the current span.
    fn insert(&mut self, wx: &ComplexMatrix, wy: &ComplexMatrix) -> bool {
        let mut v: Vec<Complex64> = wx.as_slice().iter().chain(wy.as_slice()).copied().collect();
        let norm0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return false;
        }
        for z in v.iter_mut() {
            *z /= norm0;
        }
        // two passes of classical Gram-Schmidt keep the basis orthonormal
        for _ in 0..2 {
            for b in &self.basis {
                let c: Complex64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let res = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if res < RANK_TOL {
            return false;
        }
        for z in v.iter_mut() {
            *z /= res;
        }
        self.basis.push(v);
        true
    }
}

fn word_string(letters: &[usize]) -> String {
    let w = StarWord(letters.iter().map(|&k| Letter::from_alphabet_index(k)).collect());
    if w.is_empty() {
        "1".into()
    } else {
        w.to_string()
    }
}

/// [`specht_equivalent_with`] at the classical bound `n²`.
pub fn specht_equivalent(x: &MatrixTuple, y: &MatrixTuple, max_len: usize) -> Result<SpechtReport> {
    let n = x.n();
    specht_equivalent_with(x, y, max_len, n * n)
}

/// Compares word traces up to `max_len`. The verdict is `Distinct` on the
/// first mismatch (shortest word first), `Equivalent` when everything
/// matched and either `max_len ≥ sufficiency_bound` or the span closed up,
/// and `Undetermined` otherwise.
pub fn specht_equivalent_with(
    x: &MatrixTuple,
    y: &MatrixTuple,
    max_len: usize,
    sufficiency_bound: usize,
) -> Result<SpechtReport> {
    if x.n() != y.n() || x.d() != y.d() {
        return Err(Error::DimensionMismatch("Specht comparison needs tuples of equal shape".into()));
    }
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let n = x.n();
    // alphabet x1, x1*, x2, x2*, …
    let mut alphabet: Vec<(ComplexMatrix, ComplexMatrix)> = Vec::with_capacity(2 * x.d());
    for (a, b) in x.mats().iter().zip(y.mats()) {
        alphabet.push((a.clone(), b.clone()));
        alphabet.push((a.adjoint(), b.adjoint()));
    }
    let mut report = SpechtReport {
        verdict: SpechtVerdict::Undetermined,
        max_len,
        sufficiency_bound,
        words_checked: 1,
        span_dim: 0,
        stabilized_at: None,
        first_mismatch: None,
    };
    let mut span = Span { basis: Vec::new() };
    let unit = Node { letters: Vec::new(), wx: ComplexMatrix::identity(n), wy: ComplexMatrix::identity(n) };
    span.insert(&unit.wx, &unit.wy);
    let mut frontier = vec![unit];
    for len in 1..=max_len {
        let mut next = Vec::new();
        for node in &frontier {
            for (k, (ax, ay)) in alphabet.iter().enumerate() {
                let wx = node.wx.matmul(ax);
                let wy = node.wy.matmul(ay);
                report.words_checked += 1;
                let deviation = (wx.normalized_trace() - wy.normalized_trace()).norm();
                let mut letters = node.letters.clone();
                letters.push(k);
                if !(deviation <= MISMATCH_TOL) {
                    report.verdict = SpechtVerdict::Distinct;
                    report.span_dim = span.basis.len();
                    report.first_mismatch = Some(WordMismatch { word: word_string(&letters), len, deviation });
                    return Ok(report);
                }
                if span.insert(&wx, &wy) {
                    next.push(Node { letters, wx, wy });
                }
            }
        }
        if next.is_empty() {
            report.stabilized_at = Some(len - 1);
            break;
        }
        frontier = next;
    }
    report.span_dim = span.basis.len();
    if max_len >= sufficiency_bound || report.stabilized_at.is_some() {
        report.verdict = SpechtVerdict::Equivalent;
    }
    Ok(report)
}

/// Pair of 3×3 self-adjoint matrices whose traces agree on words of length
/// at most 2 but not 3: spectra `(1, −1, 0)` and `(2, −1, −1)/√3`.
pub fn cubic_mismatch_fixture() -> (MatrixTuple, MatrixTuple) {
    let s = 3f64.sqrt();
    let x = ComplexMatrix::from_real_diagonal(&[1.0, -1.0, 0.0]);
    let y = ComplexMatrix::from_real_diagonal(&[2.0 / s, -1.0 / s, -1.0 / s]);
    (MatrixTuple::single(x), MatrixTuple::single(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_ginibre, sample_haar_unitary, RngStream};

    #[test]
    fn conjugate_pairs_are_equivalent() {
        let mut rng = RngStream::new(9, 1).rng();
        for (n, d) in [(2, 1), (3, 2), (4, 2)] {
            let x = sample_ginibre(n, d, &mut rng);
            let y = x.conjugate_by(&sample_haar_unitary(n, &mut rng));
            let at_bound = specht_equivalent(&x, &y, n * n).unwrap();
            assert_eq!(at_bound.verdict, SpechtVerdict::Equivalent);
            assert!(at_bound.span_dim <= n * n);
            let short = specht_equivalent_with(&x, &y, 1, n * n).unwrap();
            assert_ne!(short.verdict, SpechtVerdict::Distinct);
        }
    }

    #[test]
    fn diagonal_example_is_distinct_at_length_one() {
        let x = MatrixTuple::single(ComplexMatrix::from_real_diagonal(&[0.0, 1.0]));
        let y = MatrixTuple::single(ComplexMatrix::from_real_diagonal(&[0.0, 0.0]));
        let r = specht_equivalent(&x, &y, 4).unwrap();
        assert_eq!(r.verdict, SpechtVerdict::Distinct);
        let m = r.first_mismatch.unwrap();
        assert_eq!((m.len, m.word.as_str()), (1, "x1"));
        assert!((m.deviation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cubic_fixture() {
        let (x, y) = cubic_mismatch_fixture();
        // independent check of the moments: traces of powers 1, 2, 3
        let p = |m: &ComplexMatrix, k: u32| -> f64 { (0..3).map(|i| m.get(i, i).re.powi(k as i32)).sum::<f64>() / 3.0 };
        assert!((p(x.get(0), 1) - p(y.get(0), 1)).abs() < 1e-12);
        assert!((p(x.get(0), 2) - p(y.get(0), 2)).abs() < 1e-12);
        assert!((p(x.get(0), 3) - p(y.get(0), 3)).abs() > 0.1);
        assert_eq!(specht_equivalent(&x, &y, 2).unwrap().verdict, SpechtVerdict::Undetermined);
        let r = specht_equivalent(&x, &y, 3).unwrap();
        assert_eq!(r.verdict, SpechtVerdict::Distinct);
        assert_eq!(r.first_mismatch.unwrap().len, 3);
    }

    #[test]
    fn stabilized_span_certifies_equivalence() {
        // commuting projections: the algebra closes after length 1
        let p = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]);
        let q = ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 1.0]);
        let x = MatrixTuple::single(p);
        let y = MatrixTuple::single(q);
        let r = specht_equivalent(&x, &y, 3).unwrap();
        assert_eq!(r.stabilized_at, Some(1));
        assert_eq!(r.verdict, SpechtVerdict::Equivalent);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let x = MatrixTuple::zeros(2, 1);
        let y = MatrixTuple::zeros(3, 1);
        assert!(specht_equivalent(&x, &y, 2).is_err());
        assert!(specht_equivalent(&x, &x, 0).is_err());
    }
}
