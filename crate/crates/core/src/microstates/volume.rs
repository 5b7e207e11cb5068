//! Importance-sampling estimates of microstate volumes and free entropy.

use rayon::prelude::*;
use serde::Serialize;

use super::membership::{sample_verdict, MembershipConfig, Verdict};
use super::spec::NeighborhoodSpec;
use crate::error::{Error, Result};
use crate::matrix::{coordinate_gaussian_log_density, sample_coordinate_gaussian, MatrixTuple, RngStream};

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1_000;
/// Largest sample count per `(n, spec)`.
pub const MAX_SAMPLES: usize = 10_000_000;
/// Largest matrix size accepted by [`estimate_entropy`].
pub const DEFAULT_MAX_N: usize = 16;
/// Samples drawn from one random stream.
const BLOCK: usize = 1024;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub n: usize,
    pub samples: usize,
    pub hits: usize,
    /// Samples labeled boundary (counted as misses).
    pub boundary: usize,
    /// `log vol Γ`, or `-inf` when nothing hit.
    pub log_vol: f64,
    /// 95% half-width of `log_vol` (delta method); 0 when nothing hit.
    pub ci: f64,
    /// `log_vol / n² + w log n` with `w = 2d` for general and `d` for
    /// self-adjoint matrices.
    pub h: f64,
    pub h_ci: f64,
}

fn draw_tuple(spec: &NeighborhoodSpec, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> (MatrixTuple, f64) {
    let mut log_density = 0.0;
    let mats = (0..spec.sampled_vars())
        .map(|_| {
            let (m, norm_sq) = sample_coordinate_gaussian(n, spec.domain, spec.proposal_scale, rng);
            log_density += coordinate_gaussian_log_density(n, spec.domain, spec.proposal_scale, norm_sq);
            m
        })
        .collect();
    (MatrixTuple::new(mats).expect("sampled tuples are square and equal-sized"), log_density)
}

/// Log-weights `-log γ(X)` of the hits and the boundary count of one block.
fn run_block(
    spec: &NeighborhoodSpec,
    n: usize,
    count: usize,
    stream: RngStream,
    cfg: &MembershipConfig,
) -> Result<(Vec<f64>, usize)> {
    let mut rng = stream.rng();
    let mut weights = Vec::new();
    let mut boundary = 0;
    for _ in 0..count {
        let (x, log_density) = draw_tuple(spec, n, &mut rng);
        match sample_verdict(&x, spec, cfg)? {
            Verdict::In => weights.push(-log_density),
            Verdict::Boundary => boundary += 1,
            Verdict::Out => {}
        }
    }
    Ok((weights, boundary))
}

/// Hit count over `count` draws, without the sample-size floor of
/// [`estimate_volume`]; used by config validation.
pub(crate) fn smoke_hits(
    spec: &NeighborhoodSpec,
    n: usize,
    count: usize,
    stream: &RngStream,
    cfg: &MembershipConfig,
) -> Result<usize> {
    spec.validate()?;
    Ok(run_block(spec, n, count, *stream, cfg)?.0.len())
}

/// Hit tuples with their log-weights `-log γ(X)`, over `samples` draws in
/// the same blocks and streams as [`estimate_volume`].
pub(crate) fn collect_hits(
    spec: &NeighborhoodSpec,
    n: usize,
    samples: usize,
    stream: &RngStream,
    cfg: &MembershipConfig,
) -> Result<Vec<(MatrixTuple, f64)>> {
    let blocks = samples.div_ceil(BLOCK);
    let parts: Vec<Vec<(MatrixTuple, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(samples - b * BLOCK);
            let mut rng = stream.child(b as u64).rng();
            let mut hits = Vec::new();
            for _ in 0..count {
                let (x, log_density) = draw_tuple(spec, n, &mut rng);
                if sample_verdict(&x, spec, cfg)? == Verdict::In {
                    hits.push((x, -log_density));
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// `log((1/N) Σ e^{l_i})` over hits and its delta-method 95% half-width.
pub(crate) fn log_mean_exp(log_weights: &[f64], samples: usize) -> (f64, f64) {
    if log_weights.is_empty() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nn = samples as f64;
    let (s1, s2) = log_weights.iter().fold((0.0, 0.0), |(a, b), &l| {
        let w = (l - top).exp();
        (a + w, b + w * w)
    });
    let mean = s1 / nn;
    let second = s2 / nn;
    let rel_var = ((second - mean * mean) / (nn * mean * mean)).max(0.0);
    (top + mean.ln(), Z95 * rel_var.sqrt())
}

/// `vol Γ_r^{(n)}` by importance sampling from the coordinate Gaussian of the
/// spec's domain and scale, with weight `1/γ` on hits.
pub fn estimate_volume(
    spec: &NeighborhoodSpec,
    n: usize,
    samples: usize,
    stream: &RngStream,
    cfg: &MembershipConfig,
) -> Result<VolumeEstimate> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("matrix size must be positive".into()));
    }
    if !(MIN_SAMPLES..=MAX_SAMPLES).contains(&samples) {
        return Err(Error::InvalidArgument(format!(
            "samples must be in {MIN_SAMPLES}..={MAX_SAMPLES}, got {samples}"
        )));
    }
    let blocks = samples.div_ceil(BLOCK);
    let parts: Vec<(Vec<f64>, usize)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK.min(samples - b * BLOCK);
            run_block(spec, n, count, stream.child(b as u64), cfg)
        })
        .collect::<Result<_>>()?;
    let boundary = parts.iter().map(|p| p.1).sum();
    let log_weights: Vec<f64> = parts.into_iter().flat_map(|p| p.0).collect();
    let (log_vol, ci) = log_mean_exp(&log_weights, samples);
    let n2 = (n * n) as f64;
    let weight = spec.domain.log_n_weight() * spec.sampled_vars() as f64;
    Ok(VolumeEstimate {
        n,
        samples,
        hits: log_weights.len(),
        boundary,
        log_vol,
        ci,
        h: log_vol / n2 + weight * (n as f64).ln(),
        h_ci: ci / n2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyTrend {
    /// Estimate at the largest `n`.
    pub value: f64,
    /// Least-squares slope of `h_n` against `1/n²` over the finite values.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub n_values: Vec<usize>,
    pub h_n: Vec<f64>,
    pub ci_n: Vec<f64>,
    pub per_n: Vec<VolumeEstimate>,
    pub trend: EntropyTrend,
}

/// Normalized log-volumes over a list of sizes. Each size uses its own
/// child stream, so adding sizes does not change existing values.
pub fn estimate_entropy(
    spec: &NeighborhoodSpec,
    n_list: &[usize],
    samples: usize,
    stream: &RngStream,
    cfg: &MembershipConfig,
) -> Result<EntropyEstimate> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_list must be nonempty and strictly ascending".into()));
    }
    if let Some(&big) = n_list.iter().find(|&&n| n > DEFAULT_MAX_N) {
        return Err(Error::InvalidArgument(format!("n = {big} exceeds the cap {DEFAULT_MAX_N}")));
    }
    let per_n: Vec<VolumeEstimate> = n_list
        .iter()
        .map(|&n| estimate_volume(spec, n, samples, &stream.child(n as u64), cfg))
        .collect::<Result<_>>()?;
    let h_n: Vec<f64> = per_n.iter().map(|v| v.h).collect();
    let ci_n = per_n.iter().map(|v| v.h_ci).collect();
    let trend = EntropyTrend { value: *h_n.last().expect("nonempty"), slope: inverse_square_slope(n_list, &h_n) };
    Ok(EntropyEstimate { n_values: n_list.to_vec(), h_n, ci_n, per_n, trend })
}

fn inverse_square_slope(ns: &[usize], hs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        ns.iter().zip(hs).filter(|(_, h)| h.is_finite()).map(|(&n, &h)| (1.0 / (n * n) as f64, h)).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Upper bound on the normalized log-volume of a set of `d`-tuples in `D_r^d`
/// that is covered by `(C/ε)^{n²}` operator-norm balls of radius `ε`:
/// `log C + d log π − d(log d − 1) + 2d log(2√d r + 1) + (2d − 1) log ε`.
pub fn covering_upper_bound(d: usize, r: f64, eps: f64, c: f64) -> Result<f64> {
    if d == 0 || !(r > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument("covering bound needs d >= 1, r > 0 and C > 0".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let d = d as f64;
    Ok(c.ln() + d * std::f64::consts::PI.ln() - d * (d.ln() - 1.0)
        + 2.0 * d * (2.0 * d.sqrt() * r + 1.0).ln()
        + (2.0 * d - 1.0) * eps.ln())
}
