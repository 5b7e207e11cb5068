//! Reference laws defined by their free cumulants.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cumulants::cumulants_to_moments;
use super::table::{CumulantVector, MomentVector};
use crate::error::{Error, Result};
use crate::ncpoly::{Letter, StarWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ReferenceLaw {
    /// One self-adjoint variable with `κ₂ = 1`.
    Semicircular,
    /// One variable with `κ(z, z*) = κ(z*, z) = 1`.
    Circular,
    /// `d` free circular variables.
    FreeCircularFamily(usize),
    /// `d` free semicircular variables.
    FreeSemicircularFamily(usize),
}

impl ReferenceLaw {
    pub fn d(&self) -> usize {
        match *self {
            Self::Semicircular | Self::Circular => 1,
            Self::FreeCircularFamily(d) | Self::FreeSemicircularFamily(d) => d,
        }
    }

    fn cumulants(&self, max_len: usize) -> Result<CumulantVector> {
        let mut k = CumulantVector::zeros(self.d(), max_len)?;
        if max_len < 2 {
            return Ok(k);
        }
        let one = Complex64::new(1.0, 0.0);
        for i in 1..=self.d() {
            let pairs: &[(bool, bool)] = match self {
                Self::Semicircular | Self::FreeSemicircularFamily(_) => {
                    &[(false, false), (false, true), (true, false), (true, true)]
                }
                Self::Circular | Self::FreeCircularFamily(_) => &[(false, true), (true, false)],
            };
            for &(s1, s2) in pairs {
                k.set(&StarWord(vec![Letter::free(i, s1), Letter::free(i, s2)]), one)?;
            }
        }
        Ok(k)
    }
}

impl fmt::Display for ReferenceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Semicircular => write!(f, "semicircular"),
            Self::Circular => write!(f, "circular"),
            Self::FreeCircularFamily(d) => write!(f, "free_circular_family({d})"),
            Self::FreeSemicircularFamily(d) => write!(f, "free_semicircular_family({d})"),
        }
    }
}

impl FromStr for ReferenceLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "semicircular" => return Ok(Self::Semicircular),
            "circular" => return Ok(Self::Circular),
            _ => {}
        }
        let family = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.trim().parse().ok().filter(|&d| d >= 1)
        };
        if let Some(d) = family("free_circular_family") {
            return Ok(Self::FreeCircularFamily(d));
        }
        if let Some(d) = family("free_semicircular_family") {
            return Ok(Self::FreeSemicircularFamily(d));
        }
        Err(Error::UnknownLaw(s.to_string()))
    }
}

impl TryFrom<String> for ReferenceLaw {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ReferenceLaw> for String {
    fn from(l: ReferenceLaw) -> String {
        l.to_string()
    }
}

/// Exact moments of a reference law up to word length `max_len`.
pub fn reference_law(law: ReferenceLaw, max_len: usize) -> Result<MomentVector> {
    Ok(cumulants_to_moments(&law.cumulants(max_len)?))
}

/// Same as [`reference_law`] with the law given by name.
pub fn reference_law_by_name(name: &str, max_len: usize) -> Result<MomentVector> {
    reference_law(name.parse()?, max_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::enumerate_nc;

    fn w(s: &str) -> StarWord {
        StarWord::parse(s).unwrap()
    }

    #[test]
    fn semicircular_moments() {
        let m = reference_law(ReferenceLaw::Semicircular, 6).unwrap();
        // pairings among the non-crossing partitions of 6 points
        let pairings = enumerate_nc(6).unwrap().iter().filter(|p| p.blocks().iter().all(|b| b.len() == 2)).count();
        assert_eq!(pairings, 5);
        assert_eq!(m.get(&w("x1 x1 x1 x1 x1 x1")).unwrap().re, pairings as f64);
        assert_eq!(m.get(&w("x1 x1* x1 x1 x1* x1")).unwrap().re, 5.0);
        assert_eq!(m.get(&w("x1 x1 x1")).unwrap().re, 0.0);
    }

    #[test]
    fn circular_and_family() {
        let c = reference_law(ReferenceLaw::Circular, 4).unwrap();
        assert_eq!(c.get(&w("x1 x1")).unwrap().norm(), 0.0);
        assert_eq!(c.get(&w("x1 x1*")).unwrap().re, 1.0);
        let f = reference_law_by_name("free_circular_family(2)", 4).unwrap();
        assert_eq!(f.get(&w("x1 x2*")).unwrap().norm(), 0.0);
        assert_eq!(f.get(&w("x1 x1* x2 x2*")).unwrap().re, 1.0);
        assert_eq!(f.get(&w("x1 x2 x1* x2*")).unwrap().norm(), 0.0);
        f.check_invariants(1e-14).unwrap();
    }

    #[test]
    fn names() {
        for law in [
            ReferenceLaw::Semicircular,
            ReferenceLaw::Circular,
            ReferenceLaw::FreeCircularFamily(3),
            ReferenceLaw::FreeSemicircularFamily(2),
        ] {
            assert_eq!(law.to_string().parse::<ReferenceLaw>().unwrap(), law);
        }
        assert!(matches!("gaussian".parse::<ReferenceLaw>(), Err(Error::UnknownLaw(_))));
        assert!("free_circular_family(0)".parse::<ReferenceLaw>().is_err());
        let json = serde_json::to_string(&ReferenceLaw::FreeCircularFamily(2)).unwrap();
        assert_eq!(json, "\"free_circular_family(2)\"");
    }
}
