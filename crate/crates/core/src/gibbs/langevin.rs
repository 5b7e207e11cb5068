//! Unadjusted Langevin sampler for `e^{−n² V}`.
//!
//! In orthonormal coordinates of the normalized Hilbert–Schmidt product the
//! update is `X ← X − (h/2) n² ∇V(X) + √h ξ` with `ξ` standard normal per
//! real coordinate. Steps are parameterized by `ε = n² h`, which makes the
//! drift `−(ε/2)∇V` independent of `n`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::matrix::{MatrixTuple, RngStream};
use crate::microstates::{effective_sample_size, Z95};
use crate::moments::MomentVector;

/// Quadratic-case relative bias `ε B / 2` targeted by the default step.
pub const TARGET_BIAS: f64 = 0.01;
/// Gradient check tolerance gating every sampling run.
pub const GRADIENT_CHECK_TOL: f64 = 1e-5;
/// Halvings allowed in one step before giving up.
const MAX_HALVINGS: usize = 40;
/// `‖X‖₂²` above this many times the stationary scale counts as divergence.
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct LangevinState {
    pub x: MatrixTuple,
    /// Time step `h` in coordinate units.
    pub h: f64,
    /// Accumulated time `Σ h`.
    pub t: f64,
    pub halvings: usize,
}

impl LangevinState {
    pub fn new(x: MatrixTuple, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("Langevin step must be positive, got {h}")));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("initial Langevin state".into()));
        }
        Ok(Self { x, h, t: 0.0, halvings: 0 })
    }
}

/// Largest stable `ε` for the potential: `1/B`.
pub fn max_step(potential: &Potential) -> f64 {
    1.0 / potential.bounds().b_upper
}

/// Default `ε = 2 TARGET_BIAS / B`.
pub fn default_step(potential: &Potential) -> f64 {
    2.0 * TARGET_BIAS / potential.bounds().b_upper
}

/// One Euler–Maruyama step. A non-finite gradient or update halves `h` and
/// retries with fresh noise.
pub fn langevin_step<R: Rng + ?Sized>(state: &LangevinState, potential: &Potential, rng: &mut R) -> Result<LangevinState> {
    let n = state.x.n();
    let n2 = (n * n) as f64;
    let (_, grad) = potential.value_grad(&state.x)?;
    let grad_ok = grad.is_finite();
    let mut h = state.h;
    let mut halvings = state.halvings;
    for _ in 0..=MAX_HALVINGS {
        // standard coordinate noise has E‖ξ_j‖₂² = real_dim(n)
        let xi = potential.sample_domain(n, (potential.domain().real_dim(n) as f64).sqrt(), rng);
        if grad_ok {
            let mut x = state.x.clone();
            x.axpy(-0.5 * h * n2, &grad);
            x.axpy(h.sqrt(), &xi);
            if x.is_finite() {
                return Ok(LangevinState { x, h, t: state.t + h, halvings });
            }
        }
        h *= 0.5;
        halvings += 1;
    }
    Err(Error::Numerical(format!("Langevin step failed after {MAX_HALVINGS} halvings (h = {h:e})")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub samples: usize,
    /// Steps between recorded samples.
    pub thin: usize,
    /// `ε = n² h`; defaults to [`default_step`].
    pub step: Option<f64>,
    pub max_len: usize,
    pub chains: usize,
    pub seed: RngStream,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in: 2000, samples: 400, thin: 5, step: None, max_len: 4, chains: 1, seed: RngStream::new(0, 0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordEstimate {
    pub word: String,
    pub re: f64,
    pub im: f64,
    /// 95% half-width from the effective sample size of the real part.
    pub ci: f64,
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsMoments {
    pub moments: MomentVector,
    pub words: Vec<WordEstimate>,
    pub n: usize,
    pub step: f64,
    pub samples: usize,
    /// Largest integrated autocorrelation time over words, in recorded samples.
    pub max_autocorr: f64,
    pub gradient_error: f64,
    pub halvings: usize,
}

/// Runs `cfg.chains` independent chains from the origin and time-averages
/// word traces after burn-in.
pub fn sample_gibbs_moments(potential: &Potential, n: usize, cfg: &GibbsConfig) -> Result<GibbsMoments> {
    if n == 0 || cfg.samples < 2 || cfg.thin == 0 || cfg.chains == 0 {
        return Err(Error::InvalidArgument("Gibbs run needs n >= 1, samples >= 2, thin >= 1, chains >= 1".into()));
    }
    let step = cfg.step.unwrap_or_else(|| default_step(potential));
    if !(step > 0.0) || step > max_step(potential) {
        return Err(Error::InvalidArgument(format!(
            "step {step} outside the stable range (0, {}]",
            max_step(potential)
        )));
    }
    let gradient_error = potential.gradient_check(n.min(8), &cfg.seed.child(u64::MAX))?;
    if !(gradient_error < GRADIENT_CHECK_TOL) {
        return Err(Error::Numerical(format!("potential gradient fails the finite-difference check ({gradient_error:e})")));
    }
    // stationary scale of the quadratic lower bound, for the divergence guard
    let scale = potential.d() as f64 / potential.bounds().b;
    let runs: Vec<Result<(Vec<Vec<num_complex::Complex64>>, usize)>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = cfg.seed.child(c as u64).rng();
            let mut state = LangevinState::new(MatrixTuple::zeros(n, potential.d()), step / (n * n) as f64)?;
            let mut series = Vec::with_capacity(cfg.samples);
            for k in 0..cfg.burn_in + cfg.samples * cfg.thin {
                state = langevin_step(&state, potential, &mut rng)?;
                let norm = state.x.hs_norm_sq();
                if !(norm <= DIVERGENCE_FACTOR * (1.0 + scale)) {
                    return Err(Error::Numerical(format!(
                        "chain {c} diverged at step {k}: ‖X‖₂² = {norm:e}, h = {:e}",
                        state.h
                    )));
                }
                if k >= cfg.burn_in && (k - cfg.burn_in + 1) % cfg.thin == 0 {
                    series.push(MomentVector::from_tuple(&state.x, cfg.max_len)?.iter().map(|(_, v)| v).collect());
                }
            }
            Ok((series, state.halvings))
        })
        .collect();
    let mut chains = Vec::with_capacity(cfg.chains);
    let mut halvings = 0;
    for r in runs {
        let (s, h) = r?;
        chains.push(s);
        halvings += h;
    }
    let mut moments = MomentVector::unit(potential.d(), cfg.max_len)?;
    let words_list: Vec<_> = moments.iter().map(|(w, _)| w).collect();
    let mut words = Vec::with_capacity(words_list.len());
    let mut max_autocorr: f64 = 1.0;
    let total = (cfg.chains * cfg.samples) as f64;
    for (i, w) in words_list.iter().enumerate() {
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        let mut ess = 0.0;
        let mut var = 0.0;
        for chain in &chains {
            let re: Vec<f64> = chain.iter().map(|s| s[i].re).collect();
            ess += effective_sample_size(&re);
            sum += chain.iter().map(|s| s[i]).sum::<num_complex::Complex64>();
        }
        let mean = sum / total;
        for chain in &chains {
            var += chain.iter().map(|s| (s[i].re - mean.re).powi(2)).sum::<f64>();
        }
        var /= (total - 1.0).max(1.0);
        max_autocorr = max_autocorr.max(total / ess);
        if !w.is_empty() {
            moments.set(w, mean)?;
        }
        words.push(WordEstimate {
            word: if w.is_empty() { "1".into() } else { w.to_string() },
            re: mean.re,
            im: mean.im,
            ci: Z95 * (var / ess).sqrt(),
            ess,
        });
    }
    Ok(GibbsMoments {
        moments,
        words,
        n,
        step,
        samples: cfg.samples * cfg.chains,
        max_autocorr,
        gradient_error,
        halvings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixDomain;
    use crate::moments::{reference_law, ReferenceLaw};
    use crate::ncpoly::StarWord;

    #[test]
    fn quadratic_stationary_second_moment() {
        // V = ‖X‖₂²: each of the 2n² coordinates has variance 1/(2n²(1 − ε/2))
        let p = Potential::quadratic(1.0, 1, MatrixDomain::General).unwrap();
        let cfg = GibbsConfig { burn_in: 600, samples: 300, max_len: 2, ..GibbsConfig::default() };
        let r = sample_gibbs_moments(&p, 24, &cfg).unwrap();
        let w = StarWord(vec![crate::ncpoly::Letter::free(1, false), crate::ncpoly::Letter::free(1, true)]);
        let m = r.moments.get(&w).unwrap().re;
        let exact = 1.0 / (1.0 - r.step / 2.0);
        assert!((m - exact).abs() / exact < 0.02, "{m} vs {exact}");
    }

    #[test]
    fn self_adjoint_quadratic_gives_semicircle() {
        let p = Potential::quadratic(0.5, 1, MatrixDomain::SelfAdjoint).unwrap();
        let cfg = GibbsConfig { burn_in: 1000, samples: 200, step: Some(0.02), ..GibbsConfig::default() };
        let r = sample_gibbs_moments(&p, 32, &cfg).unwrap();
        let reference = reference_law(ReferenceLaw::Semicircular, 4).unwrap();
        assert!(r.moments.max_abs_diff(&reference).unwrap() < 0.05);
    }

    #[test]
    fn self_adjointness_is_preserved() {
        let p = Potential::quartic(0.1).unwrap();
        let mut rng = RngStream::new(5, 5).rng();
        let mut s = LangevinState::new(MatrixTuple::zeros(8, 1), 0.01 / 64.0).unwrap();
        for _ in 0..50 {
            s = langevin_step(&s, &p, &mut rng).unwrap();
            assert!(s.x.get(0).hermitian_defect() < 1e-10);
        }
    }

    #[test]
    fn flat_potential_diffuses_linearly() {
        let p = Potential::flat(1, MatrixDomain::General);
        let n = 6;
        let steps = 50;
        let mut total = 0.0;
        let reps = 200;
        let mut t = 0.0;
        for r in 0..reps {
            let mut rng = RngStream::new(6, r).rng();
            let mut s = LangevinState::new(MatrixTuple::zeros(n, 1), 0.1).unwrap();
            for _ in 0..steps {
                s = langevin_step(&s, &p, &mut rng).unwrap();
            }
            total += s.x.hs_norm_sq();
            t = s.t;
        }
        // E‖X_t‖₂² = real_dim · t
        let expected = (2 * n * n) as f64 * t;
        assert!((total / reps as f64 - expected).abs() / expected < 0.05);
    }

    #[test]
    fn deterministic_under_seed() {
        let p = Potential::quartic(0.1).unwrap();
        let cfg = GibbsConfig { burn_in: 20, samples: 10, thin: 2, ..GibbsConfig::default() };
        let a = sample_gibbs_moments(&p, 6, &cfg).unwrap();
        let b = sample_gibbs_moments(&p, 6, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unstable_step_is_rejected() {
        let p = Potential::quadratic(1.0, 1, MatrixDomain::General).unwrap();
        let cfg = GibbsConfig { step: Some(1.5), ..GibbsConfig::default() };
        assert!(sample_gibbs_moments(&p, 4, &cfg).is_err());
    }
}
