//! Volume ratio of a joint neighborhood inside a product of microstate
//! spaces, estimated by sampling each factor uniformly.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::membership::{is_microstate, MembershipConfig, Verdict};
use super::spec::{NeighborhoodSpec, SpecKind};
use super::volume::Z95;
use crate::error::{Error, Result};
use crate::matrix::{coordinate_gaussian_log_density, sample_coordinate_gaussian, MatrixTuple, RngStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    /// Adaptive steps before recording.
    pub burn_in: usize,
    /// Recorded states per chain.
    pub samples: usize,
    /// Metropolis steps between recorded states.
    pub thin: usize,
    /// Initial random-walk step, as the RMS of `‖ΔX_j‖₂`.
    pub step_init: f64,
    /// Acceptance rate targeted during burn-in.
    pub target_accept: f64,
    /// Proposal draws allowed when searching for a feasible start.
    pub init_tries: usize,
    pub seed: RngStream,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in: 2_000,
            samples: 20_000,
            thin: 5,
            step_init: 0.1,
            target_accept: 0.3,
            init_tries: 100_000,
            seed: RngStream::new(0, 0),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 || self.thin == 0 || self.init_tries == 0 {
            return Err(Error::InvalidArgument("samples >= 2, thin >= 1 and init_tries >= 1 are required".into()));
        }
        if !(self.step_init > 0.0) || !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidArgument("step_init > 0 and target_accept in (0, 1) are required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JoinRatio {
    pub ratio: f64,
    /// 95% half-width from the effective sample size.
    pub ci: f64,
    pub ess: f64,
    pub samples: usize,
    /// Post-burn-in acceptance rate of each chain.
    pub acceptance: [f64; 2],
    /// Final random-walk step of each chain.
    pub step: [f64; 2],
}

/// Random-walk Metropolis chain whose target is uniform on `Γ(spec)`.
struct Chain<'a> {
    spec: &'a NeighborhoodSpec,
    cfg: &'a MembershipConfig,
    n: usize,
    state: MatrixTuple,
    step: f64,
    rng: ChaCha8Rng,
    accepted: usize,
    proposed: usize,
}

impl<'a> Chain<'a> {
    fn start(
        spec: &'a NeighborhoodSpec,
        n: usize,
        mcmc: &McmcConfig,
        stream: RngStream,
        cfg: &'a MembershipConfig,
    ) -> Result<Self> {
        let mut rng = stream.rng();
        for _ in 0..mcmc.init_tries {
            let mats = (0..spec.d)
                .map(|_| sample_coordinate_gaussian(n, spec.domain, spec.proposal_scale, &mut rng).0)
                .collect();
            let x = MatrixTuple::new(mats)?;
            if is_microstate(&x, spec, cfg)? == Verdict::In {
                return Ok(Self { spec, cfg, n, state: x, step: mcmc.step_init, rng, accepted: 0, proposed: 0 });
            }
        }
        Err(Error::Numerical(format!(
            "no feasible starting point in {} proposal draws at n = {n}",
            mcmc.init_tries
        )))
    }

    fn step(&mut self) -> Result<()> {
        let mut proposal = self.state.clone();
        for m in proposal.mats_mut() {
            let (noise, _) = sample_coordinate_gaussian(self.n, self.spec.domain, self.step, &mut self.rng);
            *m += &noise;
        }
        self.proposed += 1;
        if is_microstate(&proposal, self.spec, self.cfg)? == Verdict::In {
            self.state = proposal;
            self.accepted += 1;
        }
        Ok(())
    }

    fn burn_in(&mut self, steps: usize, target: f64) -> Result<()> {
        const WINDOW: usize = 100;
        let mut done = 0;
        while done < steps {
            let batch = WINDOW.min(steps - done);
            let before = self.accepted;
            for _ in 0..batch {
                self.step()?;
            }
            let rate = (self.accepted - before) as f64 / batch as f64;
            self.step *= (rate - target).exp();
            done += batch;
        }
        self.accepted = 0;
        self.proposed = 0;
        Ok(())
    }

    fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Effective sample size by Geyer's initial positive sequence.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return n as f64;
    }
    let acov = |lag: usize| series[..n - lag].iter().zip(&series[lag..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / n as f64;
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (acov(lag) + acov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    n as f64 / tau.max(1.0)
}

fn check_join_shapes(spec1: &NeighborhoodSpec, spec2: &NeighborhoodSpec, joint: &NeighborhoodSpec) -> Result<()> {
    for s in [spec1, spec2, joint] {
        s.validate()?;
        if s.kind == SpecKind::Existential {
            return Err(Error::InvalidArgument("independent joins need quantifier_free or full specs".into()));
        }
    }
    if joint.d != spec1.d + spec2.d {
        return Err(Error::DimensionMismatch(format!(
            "joint spec has {} variables, factors have {} + {}",
            joint.d, spec1.d, spec2.d
        )));
    }
    if spec1.domain != joint.domain || spec2.domain != joint.domain {
        return Err(Error::InvalidArgument("factor and joint specs must share a matrix domain".into()));
    }
    Ok(())
}

/// `vol(Γ(joint) ∩ Γ(spec1) × Γ(spec2)) / vol(Γ(spec1) × Γ(spec2))`: two
/// independent chains, each uniform on its factor, scored by joint
/// membership of the paired states.
pub fn independent_join_ratio(
    spec1: &NeighborhoodSpec,
    spec2: &NeighborhoodSpec,
    joint: &NeighborhoodSpec,
    n: usize,
    mcmc: &McmcConfig,
    cfg: &MembershipConfig,
) -> Result<JoinRatio> {
    check_join_shapes(spec1, spec2, joint)?;
    mcmc.validate()?;
    let mut chains = [
        Chain::start(spec1, n, mcmc, mcmc.seed.child(1), cfg)?,
        Chain::start(spec2, n, mcmc, mcmc.seed.child(2), cfg)?,
    ];
    for c in &mut chains {
        c.burn_in(mcmc.burn_in, mcmc.target_accept)?;
    }
    let mut series = Vec::with_capacity(mcmc.samples);
    for _ in 0..mcmc.samples {
        for c in &mut chains {
            for _ in 0..mcmc.thin {
                c.step()?;
            }
        }
        let pair = chains[0].state.join(&chains[1].state)?;
        series.push(if is_microstate(&pair, joint, cfg)? == Verdict::In { 1.0 } else { 0.0 });
    }
    let ratio = series.iter().sum::<f64>() / series.len() as f64;
    let ess = effective_sample_size(&series);
    Ok(JoinRatio {
        ratio,
        ci: Z95 * (ratio * (1.0 - ratio) / ess).sqrt(),
        ess,
        samples: series.len(),
        acceptance: [chains[0].acceptance(), chains[1].acceptance()],
        step: [chains[0].step, chains[1].step],
    })
}

/// The same ratio by self-normalized importance sampling from independent
/// Gaussian proposals, without Markov chains.
pub fn independent_join_ratio_direct(
    spec1: &NeighborhoodSpec,
    spec2: &NeighborhoodSpec,
    joint: &NeighborhoodSpec,
    n: usize,
    samples: usize,
    stream: &RngStream,
    cfg: &MembershipConfig,
) -> Result<f64> {
    check_join_shapes(spec1, spec2, joint)?;
    let mut rng = stream.rng();
    let draw = |spec: &NeighborhoodSpec, rng: &mut ChaCha8Rng| -> Result<Option<(MatrixTuple, f64)>> {
        let mut log_density = 0.0;
        let mut mats = Vec::with_capacity(spec.d);
        for _ in 0..spec.d {
            let (m, nsq) = sample_coordinate_gaussian(n, spec.domain, spec.proposal_scale, rng);
            log_density += coordinate_gaussian_log_density(n, spec.domain, spec.proposal_scale, nsq);
            mats.push(m);
        }
        let x = MatrixTuple::new(mats)?;
        Ok((is_microstate(&x, spec, cfg)? == Verdict::In).then_some((x, -log_density)))
    };
    let mut hits1 = Vec::new();
    let mut hits2 = Vec::new();
    for _ in 0..samples {
        if let Some(h) = draw(spec1, &mut rng)? {
            hits1.push(h);
        }
        if let Some(h) = draw(spec2, &mut rng)? {
            hits2.push(h);
        }
    }
    let pairs = hits1.len().min(hits2.len());
    if pairs == 0 {
        return Err(Error::Numerical("no proposal landed in both factors".into()));
    }
    let top = hits1[..pairs].iter().zip(&hits2[..pairs]).map(|(a, b)| a.1 + b.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in hits1[..pairs].iter().zip(&hits2[..pairs]) {
        let w = (a.1 + b.1 - top).exp();
        den += w;
        if is_microstate(&a.0.join(&b.0)?, joint, cfg)? == Verdict::In {
            num += w;
        }
    }
    Ok(num / den)
}
