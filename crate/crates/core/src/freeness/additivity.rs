//! Entropy of a joined spec against the sum of the marginal entropies.
//!
//! Both factors are sampled independently; the joint log-volume is
//! `log vol₁ + log vol₂ + log ρ`, where `ρ` is the weighted fraction of hit
//! pairs that satisfy the joint spec. With every pair checked this is the
//! product-sampling estimator `(1/N²) Σ_{i,j} w_i w_j 1_joint`, so a joint
//! spec that only repeats the marginal constraints is additive exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixTuple, RngStream};
use crate::microstates::{
    collect_hits, is_microstate, log_mean_exp, Constraint, MembershipConfig, NeighborhoodSpec, SpecKind, Verdict,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdditivityConfig {
    pub n_list: Vec<usize>,
    pub samples: usize,
    /// Pair budget; all `N₁ N₂` hit pairs are checked when they fit.
    pub max_pairs: usize,
    pub membership: MembershipConfig,
    pub seed: RngStream,
}

impl Default for AdditivityConfig {
    fn default() -> Self {
        Self {
            n_list: vec![4, 8],
            samples: 20_000,
            max_pairs: 1_000_000,
            membership: MembershipConfig::default(),
            seed: RngStream::new(0, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityRow {
    pub n: usize,
    pub hits: [usize; 2],
    pub h1: f64,
    pub h2: f64,
    pub h_joint: f64,
    /// `h1 + h2 − h_joint`; `+∞` when the joint estimate is `−∞`.
    pub deficit: f64,
    /// Weighted fraction of checked pairs in the joint spec.
    pub ratio: f64,
    pub pairs_checked: usize,
    pub all_pairs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub joint_constraints: usize,
    pub cross_constraints: usize,
    pub rows: Vec<AdditivityRow>,
}

/// Joint spec on `d₁ + d₂` variables: the first factor's constraints, the
/// second's with variables shifted by `d₁`, then `cross` (which already
/// refers to the joined variables).
pub fn joint_spec(spec1: &NeighborhoodSpec, spec2: &NeighborhoodSpec, cross: &[Constraint]) -> Result<NeighborhoodSpec> {
    for s in [spec1, spec2] {
        s.validate()?;
        if s.kind == SpecKind::Existential || s.witness_vars != 0 {
            return Err(Error::InvalidArgument("additivity needs quantifier_free or full specs".into()));
        }
    }
    if spec1.r != spec2.r || spec1.domain != spec2.domain || spec1.proposal_scale != spec2.proposal_scale {
        return Err(Error::InvalidArgument("factor specs must share radius, domain and proposal scale".into()));
    }
    let mut constraints = spec1.constraints.clone();
    for c in &spec2.constraints {
        constraints.push(Constraint { formula: c.formula.shift_free(spec1.d), ..c.clone() });
    }
    constraints.extend(cross.iter().cloned());
    let kind = if constraints.iter().all(|c| c.formula.is_quantifier_free()) {
        SpecKind::QuantifierFree
    } else {
        SpecKind::Full
    };
    let mut joint = NeighborhoodSpec::new(spec1.d + spec2.d, spec1.r, kind, constraints)?
        .with_domain(spec1.domain)
        .with_proposal_scale(spec1.proposal_scale);
    joint.max_quantifier_depth = spec1.max_quantifier_depth.max(spec2.max_quantifier_depth);
    joint.validate()?;
    Ok(joint)
}

/// Pairs `(i mod N₁, (i + s) mod N₂)` for `i < max(N₁, N₂)` and shifts
/// `s = 0, 1, …`, up to the budget; every pair when `N₁ N₂` fits.
fn pair_plan(n1: usize, n2: usize, max_pairs: usize) -> (Vec<(usize, usize)>, bool) {
    if n1 * n2 <= max_pairs {
        return ((0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect(), true);
    }
    let len = n1.max(n2);
    let shifts = (max_pairs / len).max(1).min(n1.min(n2));
    ((0..shifts).flat_map(|s| (0..len).map(move |i| (i % n1, (i + s) % n2))).collect(), false)
}

fn weighted_ratio(
    hits1: &[(MatrixTuple, f64)],
    hits2: &[(MatrixTuple, f64)],
    pairs: &[(usize, usize)],
    joint: &NeighborhoodSpec,
    cfg: &MembershipConfig,
) -> Result<f64> {
    let top = pairs.iter().map(|&(i, j)| hits1[i].1 + hits2[j].1).fold(f64::NEG_INFINITY, f64::max);
    let parts: Vec<(f64, f64)> = pairs
        .par_chunks(4096)
        .map(|chunk| {
            let (mut num, mut den) = (0.0, 0.0);
            for &(i, j) in chunk {
                let w = (hits1[i].1 + hits2[j].1 - top).exp();
                den += w;
                if is_microstate(&hits1[i].0.join(&hits2[j].0)?, joint, cfg)? == Verdict::In {
                    num += w;
                }
            }
            Ok((num, den))
        })
        .collect::<Result<_>>()?;
    let (num, den) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    Ok(num / den)
}

pub fn entropy_additivity_experiment(
    spec1: &NeighborhoodSpec,
    spec2: &NeighborhoodSpec,
    cross: &[Constraint],
    cfg: &AdditivityConfig,
) -> Result<AdditivityReport> {
    let joint = joint_spec(spec1, spec2, cross)?;
    if cfg.n_list.is_empty() || cfg.max_pairs == 0 {
        return Err(Error::InvalidArgument("additivity needs sizes and a positive pair budget".into()));
    }
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let stream = cfg.seed.child(n as u64);
        let hits1 = collect_hits(spec1, n, cfg.samples, &stream.child(1), &cfg.membership)?;
        let hits2 = collect_hits(spec2, n, cfg.samples, &stream.child(2), &cfg.membership)?;
        let lw1: Vec<f64> = hits1.iter().map(|h| h.1).collect();
        let lw2: Vec<f64> = hits2.iter().map(|h| h.1).collect();
        let (lv1, _) = log_mean_exp(&lw1, cfg.samples);
        let (lv2, _) = log_mean_exp(&lw2, cfg.samples);
        let n2 = (n * n) as f64;
        let log_n = (n as f64).ln();
        let w = spec1.domain.log_n_weight();
        let h1 = lv1 / n2 + w * spec1.d as f64 * log_n;
        let h2 = lv2 / n2 + w * spec2.d as f64 * log_n;
        let (ratio, pairs_checked, all_pairs) = if hits1.is_empty() || hits2.is_empty() {
            (0.0, 0, true)
        } else {
            let (pairs, all) = pair_plan(hits1.len(), hits2.len(), cfg.max_pairs);
            (weighted_ratio(&hits1, &hits2, &pairs, &joint, &cfg.membership)?, pairs.len(), all)
        };
        let lv_joint = if ratio > 0.0 { lv1 + lv2 + ratio.ln() } else { f64::NEG_INFINITY };
        let h_joint = lv_joint / n2 + w * joint.d as f64 * log_n;
        let deficit = if h_joint == f64::NEG_INFINITY { f64::INFINITY } else { h1 + h2 - h_joint };
        rows.push(AdditivityRow {
            n,
            hits: [hits1.len(), hits2.len()],
            h1,
            h2,
            h_joint,
            deficit,
            ratio,
            pairs_checked,
            all_pairs,
        });
    }
    Ok(AdditivityReport { joint_constraints: joint.constraints.len(), cross_constraints: cross.len(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixDomain;

    fn box_spec(cs: &[(&str, f64, f64)]) -> NeighborhoodSpec {
        let constraints = cs.iter().map(|&(f, t, e)| Constraint::new(f, t, e).unwrap()).collect();
        NeighborhoodSpec::new(1, 3.0, SpecKind::QuantifierFree, constraints)
            .unwrap()
            .with_domain(MatrixDomain::SelfAdjoint)
    }

    fn semicircle_box() -> NeighborhoodSpec {
        box_spec(&[("tr.re(x1)", 0.0, 0.2), ("tr.re(x1 x1)", 1.0, 0.2)])
    }

    #[test]
    fn marginal_joint_is_additive() {
        let s = semicircle_box();
        let cfg = AdditivityConfig { n_list: vec![3], samples: 4000, ..AdditivityConfig::default() };
        let r = entropy_additivity_experiment(&s, &s, &[], &cfg).unwrap();
        let row = &r.rows[0];
        assert!(row.hits[0] > 0 && row.all_pairs);
        assert_eq!(row.ratio, 1.0);
        assert!(row.deficit.abs() < 1e-12, "{}", row.deficit);
    }

    #[test]
    fn cross_constraint_costs_little_and_contradiction_is_fatal() {
        let s = semicircle_box();
        let cfg = AdditivityConfig { n_list: vec![4], samples: 4000, max_pairs: 50_000, ..AdditivityConfig::default() };
        let near_free = [Constraint::new("tr.re(x1 x2)", 0.0, 0.1).unwrap()];
        let r = entropy_additivity_experiment(&s, &s, &near_free, &cfg).unwrap();
        let row = &r.rows[0];
        assert!(row.ratio > 0.0 && row.ratio < 1.0);
        assert!(row.deficit > 0.0 && row.deficit < 0.1, "{}", row.deficit);
        assert!(!row.all_pairs && row.pairs_checked <= 50_000);
        let impossible = [Constraint::new("tr.re(x1 x2)", 5.0, 0.1).unwrap()];
        let r = entropy_additivity_experiment(&s, &s, &impossible, &cfg).unwrap();
        assert_eq!(r.rows[0].h_joint, f64::NEG_INFINITY);
    }

    #[test]
    fn joint_spec_shifts_second_factor() {
        let s1 = semicircle_box();
        let s2 = box_spec(&[("tr.re(x1 x1 x1 x1)", 2.0, 0.5)]);
        let j = joint_spec(&s1, &s2, &[]).unwrap();
        assert_eq!(j.d, 2);
        assert_eq!(j.constraints[2].formula.to_string(), "tr.re(x2 x2 x2 x2)");
    }

    #[test]
    fn pair_plans() {
        assert_eq!(pair_plan(2, 3, 10).0.len(), 6);
        let (p, all) = pair_plan(100, 50, 1000);
        assert!(!all);
        assert_eq!(p.len(), 1000);
        assert!(p.iter().all(|&(i, j)| i < 100 && j < 50));
    }
}
