//! Two Haar-conjugated pairs whose coordinates have the same moments but
//! which sit at different orbit distance.
//!
//! Configuration (A) pairs `UXU^*` with `VXV^*`, configuration (B) pairs
//! `UXU^*` with `VYV^*`. Each coordinate has the same law up to the matched
//! degree in both, and both pairs are independent, yet `ψ` separates them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sample_haar_unitary, ComplexMatrix, MatrixTuple, RngStream};
use crate::moments::MomentVector;
use crate::optimize::OptConfig;
use crate::transport::psi_distance;

/// Moments of the fixture's two tuples must agree to this tolerance.
pub const FIXTURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "FixtureFile")]
pub struct OrbitFixture {
    pub x: MatrixTuple,
    pub y: MatrixTuple,
    /// Word traces agree up to this length.
    pub matched_degree: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    x_spectrum: Vec<f64>,
    y_spectrum: Vec<f64>,
    matched_degree: usize,
}

impl TryFrom<FixtureFile> for OrbitFixture {
    type Error = Error;

    fn try_from(f: FixtureFile) -> Result<Self> {
        Self::from_spectra(&f.x_spectrum, &f.y_spectrum, f.matched_degree)
    }
}

impl OrbitFixture {
    /// Checks that the word traces of `x` and `y` agree up to the declared
    /// degree.
    pub fn new(x: MatrixTuple, y: MatrixTuple, matched_degree: usize) -> Result<Self> {
        if x.n() != y.n() || x.d() != y.d() {
            return Err(Error::DimensionMismatch("fixture tuples differ in shape".into()));
        }
        let diff = MomentVector::from_tuple(&x, matched_degree)?.max_abs_diff(&MomentVector::from_tuple(&y, matched_degree)?)?;
        if diff > FIXTURE_TOL {
            return Err(Error::InvalidArgument(format!(
                "fixture moments differ by {diff:e} at degree <= {matched_degree}"
            )));
        }
        Ok(Self { x, y, matched_degree })
    }

    /// Diagonal self-adjoint fixture from two spectra.
    pub fn from_spectra(x: &[f64], y: &[f64], matched_degree: usize) -> Result<Self> {
        Self::new(
            MatrixTuple::single(ComplexMatrix::from_real_diagonal(x)),
            MatrixTuple::single(ComplexMatrix::from_real_diagonal(y)),
            matched_degree,
        )
    }

    pub fn from_json(src: &str) -> Result<Self> {
        Ok(serde_json::from_str(src)?)
    }

    /// Frozen `n = 4` pair: spectra `(−3/2, ½, ½, ½)` and `(−½, −½, −½, 3/2)`
    /// share `tr x = 0` and `tr x² = ¾` but differ at degree 3, and their
    /// orbit distance is the sorted-spectrum distance 1.
    pub fn frozen() -> Self {
        Self::from_spectra(&[-1.5, 0.5, 0.5, 0.5], &[-0.5, -0.5, -0.5, 1.5], 2).expect("frozen fixture is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationConfig {
    pub trials: usize,
    pub opt: OptConfig,
    pub seed: RngStream,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self { trials: 20, opt: OptConfig::default(), seed: RngStream::new(0, 0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigurationSummary {
    pub psi: Vec<f64>,
    pub psi_mean: f64,
    /// Trial-averaged word traces of the second coordinate, up to the
    /// matched degree, as `(word, re, im)`.
    pub second_moments: Vec<(String, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub n: usize,
    pub matched_degree: usize,
    pub a: ConfigurationSummary,
    pub b: ConfigurationSummary,
    /// `mean ψ(B) − mean ψ(A)`.
    pub psi_gap: f64,
    /// Largest difference between the (A) and (B) moment tables.
    pub moment_gap: f64,
}

fn summarize(runs: &[(f64, MomentVector)]) -> ConfigurationSummary {
    let psi: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let count = runs.len() as f64;
    let second_moments = runs[0]
        .1
        .iter()
        .enumerate()
        .map(|(k, (w, _))| {
            let sum: num_complex::Complex64 = runs.iter().map(|r| r.1.iter().nth(k).expect("same table").1).sum();
            let word = if w.is_empty() { "1".to_string() } else { w.to_string() };
            (word, sum.re / count, sum.im / count)
        })
        .collect();
    ConfigurationSummary { psi_mean: psi.iter().sum::<f64>() / count, psi, second_moments }
}

pub fn orbit_separation_experiment(fixture: &OrbitFixture, cfg: &SeparationConfig) -> Result<SeparationReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = fixture.x.n();
    let run = |t: usize, second: &MatrixTuple| -> Result<(f64, MomentVector)> {
        let mut rng = cfg.seed.child(t as u64).rng();
        let u = sample_haar_unitary(n, &mut rng);
        let v = sample_haar_unitary(n, &mut rng);
        let p = fixture.x.conjugate_by(&u);
        let q = second.conjugate_by(&v);
        let opt = cfg.opt.with_seed(cfg.opt.seed.child(t as u64));
        let psi = psi_distance(&p, &q, &opt)?.value;
        Ok((psi, MomentVector::from_tuple(&q, fixture.matched_degree)?))
    };
    // both configurations reuse the same U, V per trial
    let a: Vec<(f64, MomentVector)> = (0..cfg.trials).into_par_iter().map(|t| run(t, &fixture.x)).collect::<Result<_>>()?;
    let b: Vec<(f64, MomentVector)> = (0..cfg.trials).into_par_iter().map(|t| run(t, &fixture.y)).collect::<Result<_>>()?;
    let a = summarize(&a);
    let b = summarize(&b);
    let moment_gap = a
        .second_moments
        .iter()
        .zip(&b.second_moments)
        .map(|(p, q)| (p.1 - q.1).hypot(p.2 - q.2))
        .fold(0.0, f64::max);
    Ok(SeparationReport { n, matched_degree: fixture.matched_degree, psi_gap: b.psi_mean - a.psi_mean, a, b, moment_gap })
}
