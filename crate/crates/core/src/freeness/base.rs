//! Deterministic base matrices: diagonal quantile discretizations of laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, MatrixTuple};
use crate::transport::SpectralMeasure;

/// A self-adjoint base variable, realized at size `n` as the diagonal of
/// quantiles `F^{-1}((i + ½)/n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    /// A named law; `semicircular` (variance 1) is supported.
    Law { name: String },
    /// A finitely supported law as `(location, weight)` atoms.
    Atoms { atoms: Vec<(f64, f64)> },
    /// The scalar `c·1`.
    Scalar { value: f64 },
}

/// Semicircle CDF on `[−2, 2]`.
fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
}

fn semicircle_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-2.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Quantiles of a finitely supported measure at the midpoints `(i + ½)/n`.
pub fn measure_quantiles(mu: &SpectralMeasure, n: usize) -> Vec<f64> {
    let atoms = mu.atoms();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    let mut cum = atoms[0].1;
    for i in 0..n {
        let p = (i as f64 + 0.5) / n as f64;
        while cum < p && k + 1 < atoms.len() {
            k += 1;
            cum += atoms[k].1;
        }
        out.push(atoms[k].0);
    }
    out
}

impl BaseSpec {
    pub fn semicircular() -> Self {
        BaseSpec::Law { name: "semicircular".into() }
    }

    /// Sorted diagonal entries at size `n`.
    pub fn quantiles(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        match self {
            BaseSpec::Law { name } if name == "semicircular" || name == "semicircle" => {
                Ok((0..n).map(|i| semicircle_quantile((i as f64 + 0.5) / n as f64)).collect())
            }
            BaseSpec::Law { name } => Err(Error::UnknownLaw(name.clone())),
            BaseSpec::Atoms { atoms } => Ok(measure_quantiles(&SpectralMeasure::new(atoms.clone())?, n)),
            BaseSpec::Scalar { value } => Ok(vec![*value; n]),
        }
    }

    /// The empirical measure of the realized matrix.
    pub fn measure(&self, n: usize) -> Result<SpectralMeasure> {
        SpectralMeasure::uniform(&self.quantiles(n)?)
    }

    pub fn realize(&self, n: usize) -> Result<ComplexMatrix> {
        Ok(ComplexMatrix::from_real_diagonal(&self.quantiles(n)?))
    }
}

pub fn realize_tuple(specs: &[BaseSpec], n: usize) -> Result<MatrixTuple> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("a base tuple needs at least one variable".into()));
    }
    MatrixTuple::new(specs.iter().map(|s| s.realize(n)).collect::<Result<_>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_quantiles_have_semicircle_moments() {
        let q = BaseSpec::semicircular().quantiles(2000).unwrap();
        let m = |k: i32| q.iter().map(|x| x.powi(k)).sum::<f64>() / q.len() as f64;
        assert!(m(1).abs() < 1e-12);
        assert!((m(2) - 1.0).abs() < 1e-3);
        assert!((m(4) - 2.0).abs() < 1e-3);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(semicircle_cdf(2.0), 1.0);
    }

    #[test]
    fn atom_quantiles_follow_weights() {
        let b = BaseSpec::Atoms { atoms: vec![(-1.0, 0.5), (1.0, 0.5)] };
        assert_eq!(b.quantiles(4).unwrap(), vec![-1.0, -1.0, 1.0, 1.0]);
        let b = BaseSpec::Atoms { atoms: vec![(0.0, 0.25), (2.0, 0.75)] };
        assert_eq!(b.quantiles(4).unwrap(), vec![0.0, 2.0, 2.0, 2.0]);
        assert_eq!(BaseSpec::Scalar { value: 3.0 }.quantiles(2).unwrap(), vec![3.0, 3.0]);
        assert!(BaseSpec::Law { name: "cauchy".into() }.quantiles(3).is_err());
    }

    #[test]
    fn json_form() {
        let b: BaseSpec = serde_json::from_str(r#"{"kind": "law", "name": "semicircular"}"#).unwrap();
        assert_eq!(b, BaseSpec::semicircular());
        let a: BaseSpec = serde_json::from_str(r#"{"kind": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]}"#).unwrap();
        assert_eq!(a.quantiles(2).unwrap(), vec![-1.0, 1.0]);
    }
}
