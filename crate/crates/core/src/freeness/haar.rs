//! Haar-conjugation experiments: asymptotic freeness and free convolution.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::base::{measure_quantiles, realize_tuple, BaseSpec};
use crate::error::{Error, Result};
use crate::matrix::{sample_haar_unitary, ComplexMatrix, MatrixTuple, RngStream};
use crate::moments::{free_convolve, free_product_moments, MomentVector};
use crate::transport::SpectralMeasure;

/// Tolerance of the per-run check that conjugation keeps a tuple's own
/// word traces, relative to `max(1, |m|)`.
pub const CONJUGATION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreenessConfig {
    pub n_list: Vec<usize>,
    pub max_len: usize,
    pub trials: usize,
    /// Threshold for the exceedance frequency.
    pub eps: f64,
    pub seed: RngStream,
}

impl Default for FreenessConfig {
    fn default() -> Self {
        Self { n_list: vec![64, 512], max_len: 4, trials: 10, eps: 0.05, seed: RngStream::new(0, 0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreenessRow {
    pub n: usize,
    pub mean_deviation: f64,
    pub max_deviation: f64,
    /// Fraction of trials whose deviation exceeds `eps`.
    pub exceed_frequency: f64,
    pub deviations: Vec<f64>,
    /// Word with the largest deviation in the worst trial.
    pub worst_word: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreenessReport {
    pub d_x: usize,
    pub d_y: usize,
    pub max_len: usize,
    pub eps: f64,
    pub rows: Vec<FreenessRow>,
}

fn check_conjugation_invariance(before: &MatrixTuple, after: &MatrixTuple, max_len: usize) -> Result<()> {
    let a = MomentVector::from_tuple(before, max_len)?;
    let b = MomentVector::from_tuple(after, max_len)?;
    for ((w, u), (_, v)) in a.iter().zip(b.iter()) {
        if (u - v).norm() > CONJUGATION_TOL * u.norm().max(1.0) {
            return Err(Error::Numerical(format!(
                "Haar conjugation changed tr({w}) from {u} to {v}"
            )));
        }
    }
    Ok(())
}

/// Largest `|a(w) − b(w)|` over words, with the word.
fn max_deviation(a: &MomentVector, b: &MomentVector) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for ((w, u), (_, v)) in a.iter().zip(b.iter()) {
        let dev = (u - v).norm();
        if dev > worst.0 {
            worst = (dev, w.to_string());
        }
    }
    worst
}

/// Conjugates the base tuples by independent Haar unitaries at each `n` and
/// compares the joint word traces with the free product of their laws.
pub fn asymptotic_freeness_experiment(
    base_x: &[BaseSpec],
    base_y: &[BaseSpec],
    cfg: &FreenessConfig,
) -> Result<FreenessReport> {
    if cfg.trials == 0 || cfg.n_list.is_empty() || cfg.max_len == 0 {
        return Err(Error::InvalidArgument("freeness experiment needs trials, sizes and max_len >= 1".into()));
    }
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let x = realize_tuple(base_x, n)?;
        let y = realize_tuple(base_y, n)?;
        let law_x = MomentVector::from_tuple(&x, cfg.max_len)?;
        let law_y = MomentVector::from_tuple(&y, cfg.max_len)?;
        let oracle = free_product_moments(&law_x, &law_y, cfg.max_len)?;
        let stream = cfg.seed.child(n as u64);
        let trials: Vec<(f64, String)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream.child(t as u64).rng();
                let u = sample_haar_unitary(n, &mut rng);
                let v = sample_haar_unitary(n, &mut rng);
                let xu = x.conjugate_by(&u);
                let yv = y.conjugate_by(&v);
                check_conjugation_invariance(&x, &xu, cfg.max_len)?;
                check_conjugation_invariance(&y, &yv, cfg.max_len)?;
                let joint = MomentVector::from_tuple(&xu.join(&yv)?, cfg.max_len)?;
                Ok(max_deviation(&joint, &oracle))
            })
            .collect::<Result<_>>()?;
        let deviations: Vec<f64> = trials.iter().map(|t| t.0).collect();
        let worst = trials.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("trials >= 1");
        rows.push(FreenessRow {
            n,
            mean_deviation: deviations.iter().sum::<f64>() / deviations.len() as f64,
            max_deviation: worst.0,
            exceed_frequency: deviations.iter().filter(|&&d| d > cfg.eps).count() as f64 / deviations.len() as f64,
            worst_word: worst.1.clone(),
            deviations,
        });
    }
    Ok(FreenessReport { d_x: base_x.len(), d_y: base_y.len(), max_len: cfg.max_len, eps: cfg.eps, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvolutionConfig {
    pub n: usize,
    pub trials: usize,
    pub max_len: usize,
    pub seed: RngStream,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        Self { n: 1024, trials: 2, max_len: 6, seed: RngStream::new(0, 0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvolutionReport {
    pub n: usize,
    /// `m_0, …, m_L` of the free convolution of the two discretized laws.
    pub oracle: Vec<f64>,
    /// Trial-averaged moments of `A + U B U^*`.
    pub simulated: Vec<f64>,
    pub per_trial: Vec<Vec<f64>>,
    /// `|simulated_k − oracle_k|`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// `tr_n(S^k)` for `k ≤ max_len`, `S` self-adjoint.
fn power_traces(s: &ComplexMatrix, max_len: usize) -> Vec<f64> {
    let n = s.dim();
    let half = max_len.div_ceil(2);
    let mut powers = vec![ComplexMatrix::identity(n), s.clone()];
    for k in 2..=half {
        powers.push(powers[k - 1].matmul(s));
    }
    (0..=max_len)
        .map(|k| {
            let a = k.min(half);
            powers[a].trace_of_product(&powers[k - a]).re
        })
        .collect()
}

/// Moments of `A + U B U^*` with `A`, `B` the diagonal quantile matrices of
/// `mu`, `nu` at size `n`, against the free convolution of their laws.
pub fn free_convolution_experiment(
    mu: &SpectralMeasure,
    nu: &SpectralMeasure,
    cfg: &ConvolutionConfig,
) -> Result<ConvolutionReport> {
    let n = cfg.n;
    if n == 0 || cfg.trials == 0 || cfg.max_len == 0 {
        return Err(Error::InvalidArgument("convolution experiment needs n, trials and max_len >= 1".into()));
    }
    let qa = measure_quantiles(mu, n);
    let qb = measure_quantiles(nu, n);
    let a = ComplexMatrix::from_real_diagonal(&qa);
    let b = ComplexMatrix::from_real_diagonal(&qb);
    let law_a = SpectralMeasure::uniform(&qa)?.moments(cfg.max_len)?;
    let law_b = SpectralMeasure::uniform(&qb)?.moments(cfg.max_len)?;
    let oracle = free_convolve(&law_a, &law_b, cfg.max_len)?.univariate_moments(1e-10)?;
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let u = sample_haar_unitary(n, &mut cfg.seed.child(t as u64).rng());
            let mut s = b.conjugate_by(&u).hermitian_part();
            s.axpy(Complex64::new(1.0, 0.0), &a);
            power_traces(&s, cfg.max_len)
        })
        .collect();
    let simulated: Vec<f64> = (0..=cfg.max_len)
        .map(|k| per_trial.iter().map(|m| m[k]).sum::<f64>() / per_trial.len() as f64)
        .collect();
    let deviations: Vec<f64> = simulated.iter().zip(&oracle).map(|(s, o)| (s - o).abs()).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(ConvolutionReport { n, oracle, simulated, per_trial, deviations, max_deviation })
}
