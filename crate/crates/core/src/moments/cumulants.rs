//! Free cumulants, free products and free additive convolution.
//!
//! Both directions use the first-block decomposition of non-crossing
//! partitions: for a word `w = a_1 … a_m`,
//! `τ(w) = Σ_{S ∋ 1} κ(w|_S) · Π τ(gap)`, where `S = {1 = s_1 < … < s_k}` is
//! the block containing the first letter and the gaps are the runs of letters
//! strictly between consecutive elements of `S` and after `s_k`. Every gap
//! word is shorter than `w`, so tables fill in order of length.

use num_complex::Complex64;
use rayon::prelude::*;

use super::table::{CumulantVector, MomentVector, WordTable};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance for deciding that a univariate law is self-adjoint.
const SELF_ADJOINT_TOL: f64 = 1e-10;

struct FirstBlock<'a> {
    word: &'a [usize],
    kappa: &'a WordTable,
    moments: &'a WordTable,
    /// Leave out `S = {1, …, m}`, whose term is `κ(w)` itself.
    skip_full: bool,
}

impl FirstBlock<'_> {
    fn sum(&self) -> Complex64 {
        let mut total = ZERO;
        let mut sel = vec![self.word[0]];
        self.extend(0, &mut sel, Complex64::new(1.0, 0.0), &mut total);
        total
    }

    fn extend(&self, last: usize, sel: &mut Vec<usize>, prod: Complex64, total: &mut Complex64) {
        let w = self.word;
        let m = w.len();
        if !(self.skip_full && sel.len() == m) {
            let tail = self.moments.values[self.moments.index(&w[last + 1..])];
            if tail != ZERO {
                *total += self.kappa.values[self.kappa.index(sel)] * prod * tail;
            }
        }
        for next in last + 1..m {
            let gap = self.moments.values[self.moments.index(&w[last + 1..next])];
            if gap == ZERO {
                continue;
            }
            sel.push(w[next]);
            self.extend(next, sel, prod * gap, total);
            sel.pop();
        }
    }
}

/// Free cumulants of a moment vector (starred letters are distinct letters).
pub fn moments_to_cumulants(mv: &MomentVector) -> CumulantVector {
    let moments = &mv.table;
    let mut kappa = WordTable::zeros(moments.d, moments.max_len).expect("same shape as a valid table");
    for l in 1..=moments.max_len {
        let layer: Vec<Complex64> = moments
            .layer(l)
            .into_par_iter()
            .map(|i| {
                let word = moments.letters(i);
                let rest = FirstBlock { word: &word, kappa: &kappa, moments, skip_full: true }.sum();
                moments.values[i] - rest
            })
            .collect();
        let range = kappa.layer(l);
        kappa.values[range].copy_from_slice(&layer);
    }
    CumulantVector { table: kappa }
}

/// Moments from free cumulants; exact inverse of [`moments_to_cumulants`].
/// The cumulant at the empty word is ignored.
pub fn cumulants_to_moments(cv: &CumulantVector) -> MomentVector {
    let kappa = &cv.table;
    let mut moments = WordTable::zeros(kappa.d, kappa.max_len).expect("same shape as a valid table");
    moments.values[0] = Complex64::new(1.0, 0.0);
    for l in 1..=kappa.max_len {
        let layer: Vec<Complex64> = kappa
            .layer(l)
            .into_par_iter()
            .map(|i| {
                let word = kappa.letters(i);
                FirstBlock { word: &word, kappa, moments: &moments, skip_full: false }.sum()
            })
            .collect();
        let range = moments.layer(l);
        moments.values[range].copy_from_slice(&layer);
    }
    MomentVector { table: moments }
}

/// Joint moments of `(A, B)` with the two families freely independent:
/// cumulants within each family are inherited and mixed cumulants vanish.
/// Variables of `b` are renumbered after those of `a`.
pub fn free_product_moments(a: &MomentVector, b: &MomentVector, max_len: usize) -> Result<MomentVector> {
    for (name, mv) in [("first", a), ("second", b)] {
        if mv.max_len() < max_len {
            return Err(Error::InvalidArgument(format!(
                "{name} family has moments only up to length {}, need {max_len}",
                mv.max_len()
            )));
        }
    }
    let ka = moments_to_cumulants(&a.truncate(max_len)?).table;
    let kb = moments_to_cumulants(&b.truncate(max_len)?).table;
    let split = 2 * a.d();
    let mut joint = WordTable::zeros(a.d() + b.d(), max_len)?;
    for i in 1..joint.len() {
        let letters = joint.letters(i);
        if letters.iter().all(|&k| k < split) {
            joint.values[i] = ka.values[ka.index(&letters)];
        } else if letters.iter().all(|&k| k >= split) {
            let shifted: Vec<usize> = letters.iter().map(|&k| k - split).collect();
            joint.values[i] = kb.values[kb.index(&shifted)];
        }
    }
    Ok(cumulants_to_moments(&CumulantVector { table: joint }))
}

/// Moments of `X + Y` for free self-adjoint `X ~ μ`, `Y ~ ν`, by adding free
/// cumulants.
pub fn free_convolve(mu: &MomentVector, nu: &MomentVector, max_len: usize) -> Result<MomentVector> {
    for (name, mv) in [("first", mu), ("second", nu)] {
        mv.univariate_moments(SELF_ADJOINT_TOL)
            .map_err(|e| Error::InvalidArgument(format!("{name} argument: {e}")))?;
        if mv.max_len() < max_len {
            return Err(Error::InvalidArgument(format!(
                "{name} argument has moments only up to degree {}, need {max_len}",
                mv.max_len()
            )));
        }
    }
    let mut k = moments_to_cumulants(&mu.truncate(max_len)?);
    let kn = moments_to_cumulants(&nu.truncate(max_len)?);
    for (x, y) in k.table.values.iter_mut().zip(&kn.table.values) {
        *x += y;
    }
    Ok(cumulants_to_moments(&k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_ginibre, MatrixTuple, RngStream};
    use crate::moments::{enumerate_nc, catalan_numbers};
    use crate::ncpoly::StarWord;

    fn w(s: &str) -> StarWord {
        StarWord::parse(s).unwrap()
    }

    fn semicircle(max_len: usize) -> MomentVector {
        let c = catalan_numbers(max_len);
        let m: Vec<f64> = (0..=max_len).map(|k| if k % 2 == 0 { c[k / 2] as f64 } else { 0.0 }).collect();
        MomentVector::self_adjoint_univariate(&m).unwrap()
    }

    #[test]
    fn semicircle_has_only_second_cumulant() {
        let k = moments_to_cumulants(&semicircle(8));
        for (word, v) in k.iter() {
            let expect = if word.len() == 2 { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-12, "{word}: {v}");
        }
    }

    #[test]
    fn point_mass_cumulants() {
        // brute-force inversion for a point mass at c: κ1 = c and κ_k = 0 for k ≥ 2
        let c = 0.7f64;
        let mv = MomentVector::self_adjoint_univariate(&[1.0, c, c * c, c.powi(3), c.powi(4)]).unwrap();
        let k = moments_to_cumulants(&mv);
        assert!((k.get(&w("x1")).unwrap().re - c).abs() < 1e-15);
        // κ2 = m2 - m1² by hand
        assert!(k.get(&w("x1 x1")).unwrap().norm() < 1e-15);
        assert!(k.get(&w("x1 x1* x1 x1")).unwrap().norm() < 1e-15);
        let zero = MomentVector::unit(2, 4).unwrap();
        assert!(moments_to_cumulants(&zero).iter().all(|(_, v)| v == ZERO));
    }

    #[test]
    fn circular_cumulants_give_circular_moments() {
        let mut k = CumulantVector::zeros(1, 6).unwrap();
        k.set(&w("x1 x1*"), Complex64::new(1.0, 0.0)).unwrap();
        k.set(&w("x1* x1"), Complex64::new(1.0, 0.0)).unwrap();
        let m = cumulants_to_moments(&k);
        assert_eq!(m.get(&w("x1 x1*")).unwrap().re, 1.0);
        assert_eq!(m.get(&w("x1 x1")).unwrap().norm(), 0.0);
        assert_eq!(m.get(&w("x1 x1* x1 x1*")).unwrap().re, 2.0);
        assert_eq!(m.get(&w("x1 x1 x1* x1*")).unwrap().re, 1.0);
        assert_eq!(m.get(&w("x1 x1* x1 x1* x1 x1*")).unwrap().re, 5.0);
        let mut single = CumulantVector::zeros(1, 4).unwrap();
        for word in ["x1 x1", "x1 x1*", "x1* x1", "x1* x1*"] {
            single.set(&w(word), Complex64::new(1.0, 0.0)).unwrap();
        }
        assert_eq!(cumulants_to_moments(&single).get(&w("x1 x1 x1 x1")).unwrap().re, 2.0);
        let zero = cumulants_to_moments(&CumulantVector::zeros(2, 3).unwrap());
        assert!(zero.max_abs_diff(&MomentVector::unit(2, 3).unwrap()).unwrap() == 0.0);
    }

    /// Second route: the explicit sum over enumerated non-crossing partitions.
    fn moment_by_partition_sum(k: &CumulantVector, word: &[usize]) -> Complex64 {
        enumerate_nc(word.len())
            .unwrap()
            .iter()
            .map(|p| {
                p.blocks()
                    .iter()
                    .map(|b| k.get_letters(&b.iter().map(|&i| word[i - 1]).collect::<Vec<_>>()))
                    .product::<Complex64>()
            })
            .sum()
    }

    #[test]
    fn recursion_agrees_with_partition_sum() {
        let x = sample_ginibre(3, 2, &mut RngStream::new(7, 7).rng()).scale(0.8);
        let mv = MomentVector::from_tuple(&x, 6).unwrap();
        let k = moments_to_cumulants(&mv);
        for i in 1..mv.num_words() {
            let letters = mv.table.letters(i);
            let direct = moment_by_partition_sum(&k, &letters);
            assert!((direct - mv.table.values[i]).norm() < 1e-12, "{letters:?}");
        }
    }

    #[test]
    fn round_trip_on_matrix_moments() {
        for (d, len, n) in [(1, 8, 4), (2, 8, 3), (3, 6, 3)] {
            let x = sample_ginibre(n, d, &mut RngStream::new(11, d as u64).rng()).scale(0.9);
            let mv = MomentVector::from_tuple(&x, len).unwrap();
            let back = cumulants_to_moments(&moments_to_cumulants(&mv));
            assert!(back.max_abs_diff(&mv).unwrap() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn free_semicirculars() {
        let s = semicircle(6);
        let joint = free_product_moments(&s, &s, 4).unwrap();
        assert!(joint.get(&w("x1 x2 x1 x2")).unwrap().norm() < 1e-14);
        assert!((joint.get(&w("x1 x1 x2 x2")).unwrap().re - 1.0).abs() < 1e-14);
        assert!((joint.get(&w("x1 x2 x2 x1")).unwrap().re - 1.0).abs() < 1e-14);
        assert!(free_product_moments(&s, &s.truncate(3).unwrap(), 4).is_err());
    }

    #[test]
    fn free_product_with_zero_and_pure_words() {
        let x = sample_ginibre(3, 1, &mut RngStream::new(3, 1).rng());
        let a = MomentVector::from_tuple(&x, 5).unwrap();
        let zero = MomentVector::unit(1, 5).unwrap();
        let joint = free_product_moments(&a, &zero, 5).unwrap();
        for i in 0..joint.num_words() {
            let letters = joint.table.letters(i);
            let v = joint.table.values[i];
            if letters.iter().any(|&k| k >= 2) {
                assert!(v.norm() < 1e-14);
            } else {
                assert!((v - a.get_letters(&letters)).norm() < 1e-13);
            }
        }
        // scalars are free from everything, so the product law is exact at finite n
        let scalar = MatrixTuple::single(crate::matrix::ComplexMatrix::scalar(3, Complex64::new(2.0, 0.0)));
        let both = MomentVector::from_tuple(&x.join(&scalar).unwrap(), 4).unwrap();
        let predicted = free_product_moments(&a, &MomentVector::from_tuple(&scalar, 4).unwrap(), 4).unwrap();
        assert!(predicted.max_abs_diff(&both).unwrap() < 1e-12);
    }

    #[test]
    fn convolution_examples() {
        let s = semicircle(6);
        let ss = free_convolve(&s, &s, 6).unwrap().univariate_moments(1e-12).unwrap();
        assert!((ss[2] - 2.0).abs() < 1e-12 && (ss[4] - 8.0).abs() < 1e-12);
        let delta0 = MomentVector::unit(1, 6).unwrap();
        assert!(free_convolve(&s, &delta0, 6).unwrap().max_abs_diff(&s).unwrap() < 1e-13);
        let (a, b) = (0.3f64, -1.2f64);
        let da = MomentVector::self_adjoint_univariate(&(0..=6).map(|k| a.powi(k)).collect::<Vec<_>>()).unwrap();
        let db = MomentVector::self_adjoint_univariate(&(0..=6).map(|k| b.powi(k)).collect::<Vec<_>>()).unwrap();
        let sum = free_convolve(&da, &db, 6).unwrap().univariate_moments(1e-12).unwrap();
        for (k, m) in sum.iter().enumerate() {
            assert!((m - (a + b).powi(k as i32)).abs() < 1e-12);
        }
        let nonreal = MomentVector::from_tuple(&sample_ginibre(3, 1, &mut RngStream::new(0, 1).rng()), 4).unwrap();
        assert!(free_convolve(&nonreal, &s, 4).is_err());
    }
}
