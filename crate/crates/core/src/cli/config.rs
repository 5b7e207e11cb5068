//! Experiment config files and the diagnostics raised while reading them.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Entropy,
    Freeness,
    Convolve,
    Gibbs,
    HopfLax,
    Wasserstein,
    Specht,
    IndependentJoin,
    OrbitSeparation,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("kind serializes");
        f.write_str(v.as_str().expect("kind is a string"))
    }
}

/// One validation finding, located by a dotted path into the config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }

    pub fn from_error(path: impl Into<String>, e: &Error) -> Self {
        Self::new(path, e.to_string())
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

pub type Diagnostics = Vec<Diagnostic>;

/// The file format: `{kind, seed, output_path, params}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// A config file read from disk, with the digest of its exact bytes.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    /// Directory relative file references are resolved against.
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, Diagnostics> {
    let bytes = std::fs::read(path).map_err(|e| vec![Diagnostic::new("", format!("{}: {e}", path.display()))])?;
    let sha256 = format!("{:x}", Sha256::digest(&bytes));
    let config: ExperimentConfig = parse_at(&bytes, "").map_err(|d| vec![d])?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, sha256, base_dir })
}

fn join_path(prefix: &str, inner: &str) -> String {
    match (prefix.is_empty(), inner.is_empty() || inner == ".") {
        (_, true) => prefix.to_string(),
        (true, false) => inner.to_string(),
        (false, false) => format!("{prefix}.{inner}"),
    }
}

/// Parses JSON bytes, locating errors by field path under `prefix`.
pub fn parse_at<T: DeserializeOwned>(bytes: &[u8], prefix: &str) -> Result<T, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = join_path(prefix, &e.path().to_string());
        Diagnostic::new(path, e.into_inner().to_string())
    })
}

/// Deserializes a JSON value, locating errors by field path under `prefix`.
pub fn from_value_at<T: DeserializeOwned>(v: &serde_json::Value, prefix: &str) -> Result<T, Diagnostic> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = join_path(prefix, &e.path().to_string());
        Diagnostic::new(path, e.into_inner().to_string())
    })
}

/// An object given inline or as a path (relative to the config file) to a
/// JSON file holding it.
pub fn resolve<T: DeserializeOwned>(v: &serde_json::Value, base: &Path, prefix: &str) -> Result<T, Diagnostic> {
    match v {
        serde_json::Value::String(p) => {
            let path = base.join(p);
            let bytes = std::fs::read(&path).map_err(|e| Diagnostic::new(prefix, format!("{}: {e}", path.display())))?;
            parse_at(&bytes, prefix)
        }
        other => from_value_at(other, prefix),
    }
}

/// Counts written as integers or as integral floats like `1e6`.
pub fn count<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    let v = f64::deserialize(d)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as usize)
    } else {
        Err(serde::de::Error::custom(format!("expected a nonnegative integer count, got {v}")))
    }
}

/// Matrix sizes as a list or as an inclusive range string `"a..b"`.
pub fn sizes<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Sizes {
        List(Vec<usize>),
        Range(String),
    }
    match Sizes::deserialize(d)? {
        Sizes::List(v) => Ok(v),
        Sizes::Range(s) => {
            let bad = || serde::de::Error::custom(format!("expected a size list or a range \"a..b\", got {s:?}"));
            let (a, b) = s.split_once("..").ok_or_else(bad)?;
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize)]
    struct Probe {
        #[serde(deserialize_with = "count")]
        samples: usize,
        #[serde(deserialize_with = "sizes")]
        n: Vec<usize>,
    }

    #[test]
    fn counts_and_ranges() {
        let p: Probe = serde_json::from_str(r#"{"samples": 1e6, "n": "4..7"}"#).unwrap();
        assert_eq!(p.samples, 1_000_000);
        assert_eq!(p.n, vec![4, 5, 6, 7]);
        let p: Probe = serde_json::from_str(r#"{"samples": 12, "n": [8]}"#).unwrap();
        assert_eq!((p.samples, p.n), (12, vec![8]));
        assert!(serde_json::from_str::<Probe>(r#"{"samples": 1.5, "n": [8]}"#).is_err());
        assert!(serde_json::from_str::<Probe>(r#"{"samples": 1, "n": "9..4"}"#).is_err());
    }

    #[test]
    fn errors_carry_field_paths() {
        let v = serde_json::json!({"samples": 3, "n": "x"});
        let d = from_value_at::<Probe>(&v, "params").unwrap_err();
        assert_eq!(d.path, "params.n");
        let d = parse_at::<ExperimentConfig>(br#"{"kind": "entropy", "sed": 1}"#, "").unwrap_err();
        assert!(d.message.contains("sed"), "{d}");
    }

    #[test]
    fn kind_names() {
        assert_eq!(Kind::HopfLax.to_string(), "hopf-lax");
        let k: Kind = serde_json::from_str("\"independent-join\"").unwrap();
        assert_eq!(k, Kind::IndependentJoin);
    }
}
