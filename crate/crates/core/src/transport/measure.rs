//! Finitely supported spectral measures and their Wasserstein distance.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigenvalues, ComplexMatrix};
use crate::moments::MomentVector;

/// Tolerance on the total mass.
pub const MASS_TOL: f64 = 1e-12;

/// Probability measure on ℝ with finitely many atoms, sorted by location.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    /// Validates positivity and unit mass, then sorts by location.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("a spectral measure needs at least one atom".into()));
        }
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("atoms need finite locations and positive weights".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    /// Uniform measure on the given points (with multiplicity).
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(points.iter().map(|&x| (x, w)).collect())
    }

    /// Empirical eigenvalue distribution of a self-adjoint matrix.
    pub fn from_matrix(x: &ComplexMatrix) -> Result<Self> {
        Self::uniform(&hermitian_eigenvalues(x)?)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `∫ x^k dμ` for `k = 0..=max_len`, as a self-adjoint moment vector.
    pub fn moments(&self, max_len: usize) -> Result<MomentVector> {
        // m_0 is exactly 1 rather than the rounded weight sum
        let m: Vec<f64> = (0..=max_len)
            .map(|k| if k == 0 { 1.0 } else { self.atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum() })
            .collect();
        MomentVector::self_adjoint_univariate(&m)
    }

    /// Reads `location,weight` rows; a header row is skipped if present.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut atoms = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::InvalidArgument(format!("row {k}: expected 2 columns, got {}", rec.len())));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(w)) => atoms.push((x, w)),
                _ if k == 0 => continue,
                _ => return Err(Error::InvalidArgument(format!("row {k}: `{}`, `{}` are not numbers", &rec[0], &rec[1]))),
            }
        }
        Self::new(atoms)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["location", "weight"])?;
        for &(x, w) in &self.atoms {
            wtr.write_record([format!("{x:?}"), format!("{w:?}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `W₂(μ, ν)` through the monotone (quantile) coupling.
pub fn wasserstein_spectral(mu: &SpectralMeasure, nu: &SpectralMeasure) -> Result<f64> {
    for m in [mu, nu] {
        let total: f64 = m.atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("measure has mass {total}")));
        }
    }
    let (a, b) = (&mu.atoms, &nu.atoms);
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    loop {
        let m = ra.min(rb);
        cost += m * (a[i].0 - b[j].0).powi(2);
        ra -= m;
        rb -= m;
        // advance whichever atom is exhausted; rounding leaves at most ~1e-16
        let adv_a = ra <= rb && i + 1 < a.len();
        let adv_b = rb <= ra && j + 1 < b.len();
        if !adv_a && !adv_b {
            break;
        }
        if adv_a {
            i += 1;
            ra += a[i].1;
        }
        if adv_b {
            j += 1;
            rb += b[j].1;
        }
    }
    Ok(cost.max(0.0).sqrt())
}
