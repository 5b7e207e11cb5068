//! Per-kind parameter schemas. Preparing an experiment validates every
//! parameter before any compute; `smoke` runs a 100-sample realizability
//! check; `run` produces the JSON result and the CSV table.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use super::config::{count, from_value_at, resolve, sizes, Diagnostic, Diagnostics, Kind};
use super::report::{num, Table};
use crate::error::{Error, Result};
use crate::freeness::{
    asymptotic_freeness_experiment, entropy_additivity_experiment, free_convolution_experiment, joint_spec,
    orbit_separation_experiment, AdditivityConfig, BaseSpec, ConvolutionConfig, FreenessConfig, OrbitFixture,
    SeparationConfig,
};
use crate::gibbs::{
    dyson_schwinger_quartic, hopf_lax_iterate, langevin_step, max_step, quadratic_closed_form,
    quadratic_iterated_closed_form, sample_gibbs_moments, GibbsConfig, HopfLaxConfig, HopfLaxVariant, LangevinState,
    Potential, GRADIENT_CHECK_TOL, MAX_COUPLING,
};
use crate::matrix::{sample_ginibre, MatrixDomain, sample_gue, sample_haar_unitary, ComplexMatrix, MatrixTuple, RngStream};
use crate::microstates::{
    independent_join_ratio, smoke_hits, Constraint, McmcConfig, MembershipConfig, NeighborhoodSpec, DEFAULT_MAX_N,
    MAX_SAMPLES, MIN_SAMPLES,
};
use crate::moments::MAX_LEN_CAP;
use crate::optimize::OptConfig;
use crate::transport::{cubic_mismatch_fixture, specht_equivalent_with, spectral_oracle, wasserstein_matrix};

/// Draws used by the realizability smoke test.
pub const SMOKE_SAMPLES: usize = 100;
/// Largest matrix size the smoke test uses.
const SMOKE_N: usize = 8;

/// Collects findings instead of stopping at the first.
struct Checker(Diagnostics);

impl Checker {
    fn require(&mut self, ok: bool, path: &str, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(Diagnostic::new(path, msg()));
        }
    }

    fn take<T>(&mut self, r: std::result::Result<T, Diagnostic>) -> Option<T> {
        r.map_err(|d| self.0.push(d)).ok()
    }

    fn lib<T>(&mut self, r: Result<T>, path: &str) -> Option<T> {
        r.map_err(|e| self.0.push(Diagnostic::from_error(path, &e))).ok()
    }

    /// Resolves a neighborhood spec and runs its own validation.
    fn spec(&mut self, v: &Value, base: &Path, path: &str) -> Option<NeighborhoodSpec> {
        let spec = self.take(resolve::<NeighborhoodSpec>(v, base, path))?;
        self.lib(spec.validate(), path)?;
        Some(spec)
    }

    fn finish<T>(self, v: T) -> std::result::Result<T, Diagnostics> {
        if self.0.is_empty() {
            Ok(v)
        } else {
            Err(self.0)
        }
    }
}

fn default_opt() -> OptConfig {
    OptConfig::default()
}

fn check_sizes(c: &mut Checker, ns: &[usize], path: &str, cap: Option<usize>) {
    c.require(!ns.is_empty() && ns.windows(2).all(|w| w[0] < w[1]), path, || {
        "sizes must be nonempty and strictly ascending".into()
    });
    c.require(ns.iter().all(|&n| n >= 1), path, || "sizes must be positive".into());
    if let Some(cap) = cap {
        c.require(ns.iter().all(|&n| n <= cap), path, || format!("sizes above the cap {cap}"));
    }
}

fn check_opt(c: &mut Checker, opt: &OptConfig, path: &str) {
    c.lib(opt.validate(), path);
}

// ---- parameter schemas ----

fn d_entropy_samples() -> usize {
    100_000
}
fn d_freeness_sizes() -> Vec<usize> {
    vec![64, 512]
}
fn d_four() -> usize {
    4
}
fn d_trials() -> usize {
    10
}
fn d_eps() -> f64 {
    0.05
}
fn d_conv_n() -> usize {
    1024
}
fn d_two() -> usize {
    2
}
fn d_six() -> usize {
    6
}
fn d_burn_in() -> usize {
    2000
}
fn d_gibbs_samples() -> usize {
    400
}
fn d_thin() -> usize {
    5
}
fn d_one() -> usize {
    1
}
fn d_sixteen() -> usize {
    16
}
fn d_z_samples() -> usize {
    1000
}
fn d_unit() -> f64 {
    1.0
}
fn d_leaves() -> usize {
    4096
}
fn d_hopf_opt() -> OptConfig {
    HopfLaxConfig::default().opt
}
fn d_eight() -> usize {
    8
}
fn d_additivity_samples() -> usize {
    20_000
}
fn d_pairs() -> usize {
    1_000_000
}
fn d_twenty() -> usize {
    20
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropyParams {
    spec: Value,
    #[serde(deserialize_with = "sizes")]
    n_list: Vec<usize>,
    #[serde(default = "d_entropy_samples", deserialize_with = "count")]
    samples: usize,
    #[serde(default)]
    membership: MembershipConfig,
    /// Accept sizes with no hits (`h_n = −∞`) instead of failing.
    #[serde(default)]
    allow_empty: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreenessParams {
    base_x: Vec<BaseSpec>,
    base_y: Vec<BaseSpec>,
    #[serde(default = "d_freeness_sizes", deserialize_with = "sizes")]
    n_list: Vec<usize>,
    #[serde(default = "d_four")]
    max_len: usize,
    #[serde(default = "d_trials")]
    trials: usize,
    #[serde(default = "d_eps")]
    eps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvolveParams {
    mu: BaseSpec,
    nu: BaseSpec,
    #[serde(default = "d_conv_n")]
    n: usize,
    #[serde(default = "d_two")]
    trials: usize,
    #[serde(default = "d_six")]
    max_len: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsParams {
    potential: Value,
    n: usize,
    #[serde(default = "d_burn_in", deserialize_with = "count")]
    burn_in: usize,
    #[serde(default = "d_gibbs_samples", deserialize_with = "count")]
    samples: usize,
    #[serde(default = "d_thin")]
    thin: usize,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default = "d_four")]
    max_len: usize,
    #[serde(default = "d_one")]
    chains: usize,
    /// Compare with the planar quartic law at this coupling.
    #[serde(default)]
    dyson_schwinger_g: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HopfLaxParams {
    potential: Value,
    t: f64,
    #[serde(default = "d_one")]
    k: usize,
    #[serde(default = "d_sixteen")]
    n: usize,
    #[serde(default = "d_z_samples", deserialize_with = "count")]
    z_samples: usize,
    /// Root mean square `‖X_j‖₂` of the evaluation point.
    #[serde(default = "d_unit")]
    x_scale: f64,
    #[serde(default)]
    variant: HopfLaxVariant,
    #[serde(default = "d_leaves")]
    max_leaves: usize,
    #[serde(default = "d_hopf_opt")]
    opt: OptConfig,
    /// For `V = c‖X‖₂²`: report the closed forms alongside.
    #[serde(default)]
    quadratic_c: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WassersteinParams {
    #[serde(default = "d_sixteen")]
    n: usize,
    #[serde(default = "d_trials")]
    pairs: usize,
    #[serde(default = "default_opt")]
    opt: OptConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpechtSource {
    /// Random Ginibre tuple against a Haar conjugate of itself.
    Conjugate { n: usize, d: usize },
    /// Two 3×3 matrices that agree in degree ≤ 2 and differ at degree 3.
    CubicFixture,
    /// Two diagonal self-adjoint matrices.
    Spectra { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpechtParams {
    source: SpechtSource,
    #[serde(default = "d_four")]
    max_len: usize,
    /// Defaults to `n²`.
    #[serde(default)]
    bound: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdditivityParams {
    #[serde(deserialize_with = "sizes")]
    n_list: Vec<usize>,
    #[serde(default = "d_additivity_samples", deserialize_with = "count")]
    samples: usize,
    #[serde(default = "d_pairs", deserialize_with = "count")]
    max_pairs: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinParams {
    spec1: Value,
    spec2: Value,
    #[serde(default)]
    cross: Vec<Constraint>,
    #[serde(default = "d_eight")]
    n: usize,
    #[serde(default)]
    mcmc: McmcConfig,
    #[serde(default)]
    membership: MembershipConfig,
    #[serde(default)]
    additivity: Option<AdditivityParams>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeparationParams {
    /// Defaults to the frozen `n = 4` fixture.
    #[serde(default)]
    fixture: Option<Value>,
    #[serde(default = "d_twenty")]
    trials: usize,
    #[serde(default = "default_opt")]
    opt: OptConfig,
}

// ---- prepared experiments ----

#[derive(Clone, Debug)]
pub enum Experiment {
    Entropy {
        spec: NeighborhoodSpec,
        n_list: Vec<usize>,
        samples: usize,
        membership: MembershipConfig,
        allow_empty: bool,
    },
    Freeness {
        base_x: Vec<BaseSpec>,
        base_y: Vec<BaseSpec>,
        cfg: FreenessConfig,
    },
    Convolve {
        mu: BaseSpec,
        nu: BaseSpec,
        cfg: ConvolutionConfig,
    },
    Gibbs {
        potential: Potential,
        n: usize,
        cfg: GibbsConfig,
        dyson_schwinger_g: Option<f64>,
    },
    HopfLax {
        potential: Potential,
        t: f64,
        k: usize,
        n: usize,
        z_samples: usize,
        x_scale: f64,
        cfg: HopfLaxConfig,
        quadratic_c: Option<f64>,
    },
    Wasserstein {
        n: usize,
        pairs: usize,
        opt: OptConfig,
    },
    Specht {
        source: SpechtSource,
        max_len: usize,
        bound: Option<usize>,
    },
    IndependentJoin {
        spec1: NeighborhoodSpec,
        spec2: NeighborhoodSpec,
        joint: NeighborhoodSpec,
        n: usize,
        mcmc: McmcConfig,
        membership: MembershipConfig,
        additivity: Option<AdditivityConfig>,
        cross: usize,
    },
    OrbitSeparation {
        fixture: OrbitFixture,
        cfg: SeparationConfig,
    },
}

/// A validated experiment with its seed.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub kind: Kind,
    pub seed: u64,
    pub experiment: Experiment,
}

pub struct Outcome {
    pub result: Value,
    pub table: Table,
}

fn stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

/// Validates `params` against the schema of `kind` and builds the inputs.
pub fn prepare(kind: Kind, params: &Value, base: &Path, seed: u64) -> std::result::Result<Prepared, Diagnostics> {
    let root = stream(seed);
    let mut c = Checker(Vec::new());
    let experiment = match kind {
        Kind::Entropy => {
            let p: EntropyParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            let spec = c.spec(&p.spec, base, "params.spec");
            check_sizes(&mut c, &p.n_list, "params.n_list", Some(DEFAULT_MAX_N));
            c.require((MIN_SAMPLES..=MAX_SAMPLES).contains(&p.samples), "params.samples", || {
                format!("samples must be in {MIN_SAMPLES}..={MAX_SAMPLES}, got {}", p.samples)
            });
            spec.map(|spec| Experiment::Entropy {
                spec,
                n_list: p.n_list,
                samples: p.samples,
                membership: p.membership,
                allow_empty: p.allow_empty,
            })
        }
        Kind::Freeness => {
            let p: FreenessParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            for (name, specs) in [("params.base_x", &p.base_x), ("params.base_y", &p.base_y)] {
                c.require(!specs.is_empty(), name, || "a base tuple needs at least one variable".into());
                for (j, s) in specs.iter().enumerate() {
                    c.lib(s.quantiles(1), &format!("{name}[{j}]"));
                }
            }
            check_sizes(&mut c, &p.n_list, "params.n_list", None);
            c.require((1..=MAX_LEN_CAP).contains(&p.max_len), "params.max_len", || {
                format!("max_len must be in 1..={MAX_LEN_CAP}")
            });
            c.require(p.trials >= 1, "params.trials", || "trials must be at least 1".into());
            c.require(p.eps > 0.0 && p.eps.is_finite(), "params.eps", || "eps must be positive".into());
            let cfg = FreenessConfig { n_list: p.n_list, max_len: p.max_len, trials: p.trials, eps: p.eps, seed: root };
            Some(Experiment::Freeness { base_x: p.base_x, base_y: p.base_y, cfg })
        }
        Kind::Convolve => {
            let p: ConvolveParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            c.lib(p.mu.quantiles(1), "params.mu");
            c.lib(p.nu.quantiles(1), "params.nu");
            c.require(p.n >= 1, "params.n", || "n must be positive".into());
            c.require(p.trials >= 1, "params.trials", || "trials must be at least 1".into());
            c.require(p.max_len >= 1, "params.max_len", || "max_len must be at least 1".into());
            let cfg = ConvolutionConfig { n: p.n, trials: p.trials, max_len: p.max_len, seed: root };
            Some(Experiment::Convolve { mu: p.mu, nu: p.nu, cfg })
        }
        Kind::Gibbs => {
            let p: GibbsParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            let potential = c.take(resolve::<Potential>(&p.potential, base, "params.potential"));
            c.require(p.n >= 1, "params.n", || "n must be positive".into());
            c.require(p.samples >= 2, "params.samples", || "samples must be at least 2".into());
            c.require(p.thin >= 1, "params.thin", || "thin must be at least 1".into());
            c.require(p.chains >= 1, "params.chains", || "chains must be at least 1".into());
            c.require(p.max_len >= 1, "params.max_len", || "max_len must be at least 1".into());
            if let (Some(step), Some(v)) = (p.step, &potential) {
                let cap = max_step(v);
                c.require(step > 0.0 && step <= cap, "params.step", || {
                    format!("step must lie in (0, {cap}] for the declared bound B")
                });
            }
            if let Some(g) = p.dyson_schwinger_g {
                c.require((0.0..=MAX_COUPLING).contains(&g), "params.dyson_schwinger_g", || {
                    format!("coupling must lie in [0, {MAX_COUPLING}]")
                });
            }
            potential.map(|potential| {
                let cfg = GibbsConfig {
                    burn_in: p.burn_in,
                    samples: p.samples,
                    thin: p.thin,
                    step: p.step,
                    max_len: p.max_len,
                    chains: p.chains,
                    seed: root,
                };
                Experiment::Gibbs { potential, n: p.n, cfg, dyson_schwinger_g: p.dyson_schwinger_g }
            })
        }
        Kind::HopfLax => {
            let p: HopfLaxParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            let potential = c.take(resolve::<Potential>(&p.potential, base, "params.potential"));
            c.require(p.t > 0.0 && p.t.is_finite(), "params.t", || "t must be positive".into());
            c.require(p.k >= 1, "params.k", || "k must be at least 1".into());
            c.require(p.n >= 1, "params.n", || "n must be positive".into());
            c.require(p.z_samples >= 1, "params.z_samples", || "z_samples must be at least 1".into());
            c.require(p.x_scale >= 0.0 && p.x_scale.is_finite(), "params.x_scale", || {
                "x_scale must be nonnegative".into()
            });
            c.require(p.max_leaves >= 4, "params.max_leaves", || "max_leaves must be at least 4".into());
            check_opt(&mut c, &p.opt, "params.opt");
            potential.map(|potential| {
                let cfg = HopfLaxConfig {
                    opt: p.opt.with_seed(root.child(1)),
                    variant: p.variant,
                    max_leaves: p.max_leaves,
                };
                Experiment::HopfLax {
                    potential,
                    t: p.t,
                    k: p.k,
                    n: p.n,
                    z_samples: p.z_samples,
                    x_scale: p.x_scale,
                    cfg,
                    quadratic_c: p.quadratic_c,
                }
            })
        }
        Kind::Wasserstein => {
            let p: WassersteinParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            c.require(p.n >= 1, "params.n", || "n must be positive".into());
            c.require(p.pairs >= 1, "params.pairs", || "pairs must be at least 1".into());
            check_opt(&mut c, &p.opt, "params.opt");
            Some(Experiment::Wasserstein { n: p.n, pairs: p.pairs, opt: p.opt })
        }
        Kind::Specht => {
            let p: SpechtParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            match &p.source {
                SpechtSource::Conjugate { n, d } => {
                    c.require(*n >= 1 && *d >= 1, "params.source", || "n and d must be positive".into())
                }
                SpechtSource::Spectra { x, y } => c.require(!x.is_empty() && x.len() == y.len(), "params.source", || {
                    "spectra must be nonempty and of equal length".into()
                }),
                SpechtSource::CubicFixture => {}
            }
            c.require(p.max_len >= 1, "params.max_len", || "max_len must be at least 1".into());
            Some(Experiment::Specht { source: p.source, max_len: p.max_len, bound: p.bound })
        }
        Kind::IndependentJoin => {
            let p: JoinParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            let spec1 = c.spec(&p.spec1, base, "params.spec1");
            let spec2 = c.spec(&p.spec2, base, "params.spec2");
            c.require(p.n >= 1, "params.n", || "n must be positive".into());
            c.lib(p.mcmc.validate(), "params.mcmc");
            if let Some(a) = &p.additivity {
                check_sizes(&mut c, &a.n_list, "params.additivity.n_list", None);
                c.require(a.samples >= MIN_SAMPLES, "params.additivity.samples", || {
                    format!("samples must be at least {MIN_SAMPLES}")
                });
                c.require(a.max_pairs >= 1, "params.additivity.max_pairs", || "max_pairs must be positive".into());
            }
            match (spec1, spec2) {
                (Some(spec1), Some(spec2)) => c.lib(joint_spec(&spec1, &spec2, &p.cross), "params.cross").map(|joint| {
                    let additivity = p.additivity.map(|a| AdditivityConfig {
                        n_list: a.n_list,
                        samples: a.samples,
                        max_pairs: a.max_pairs,
                        membership: p.membership.clone(),
                        seed: root.child(2),
                    });
                    Experiment::IndependentJoin {
                        spec1,
                        spec2,
                        joint,
                        n: p.n,
                        mcmc: McmcConfig { seed: root.child(1), ..p.mcmc },
                        membership: p.membership,
                        additivity,
                        cross: p.cross.len(),
                    }
                }),
                _ => None,
            }
        }
        Kind::OrbitSeparation => {
            let p: SeparationParams = from_value_at(params, "params").map_err(|d| vec![d])?;
            let fixture = match &p.fixture {
                Some(v) => c.take(resolve::<OrbitFixture>(v, base, "params.fixture")),
                None => Some(OrbitFixture::frozen()),
            };
            c.require(p.trials >= 1, "params.trials", || "trials must be at least 1".into());
            check_opt(&mut c, &p.opt, "params.opt");
            fixture.map(|fixture| Experiment::OrbitSeparation {
                fixture,
                cfg: SeparationConfig { trials: p.trials, opt: p.opt, seed: root },
            })
        }
    };
    let experiment = c.finish(experiment)?;
    Ok(Prepared { kind, seed, experiment: experiment.expect("no diagnostics means every part was built") })
}

impl Prepared {
    /// Realizability check on [`SMOKE_SAMPLES`] draws at a small size.
    pub fn smoke(&self) -> Result<()> {
        let s = stream(self.seed).child(99);
        match &self.experiment {
            Experiment::Entropy { spec, n_list, membership, .. } => {
                smoke_hits(spec, n_list[0].min(SMOKE_N), SMOKE_SAMPLES, &s, membership)?;
            }
            Experiment::Freeness { base_x, base_y, cfg } => {
                let n = cfg.n_list[0].min(SMOKE_N);
                for b in base_x.iter().chain(base_y) {
                    b.realize(n)?;
                }
            }
            Experiment::Convolve { mu, nu, cfg } => {
                mu.measure(cfg.n.min(SMOKE_N))?;
                nu.measure(cfg.n.min(SMOKE_N))?;
            }
            Experiment::Gibbs { potential, n, cfg, .. } => smoke_potential(potential, (*n).min(SMOKE_N), cfg.step, &s)?,
            Experiment::HopfLax { potential, n, .. } => smoke_potential(potential, (*n).min(SMOKE_N), None, &s)?,
            Experiment::Wasserstein { n, .. } => {
                let mut rng = s.rng();
                for _ in 0..SMOKE_SAMPLES {
                    let x = sample_gue((*n).min(SMOKE_N), &mut rng);
                    if !x.is_finite() {
                        return Err(Error::NonFinite("GUE smoke draw".into()));
                    }
                }
            }
            Experiment::Specht { source, .. } => {
                specht_pair(source, &s)?;
            }
            Experiment::IndependentJoin { spec1, spec2, joint, n, membership, .. } => {
                let n = (*n).min(SMOKE_N);
                smoke_hits(spec1, n, SMOKE_SAMPLES, &s.child(1), membership)?;
                smoke_hits(spec2, n, SMOKE_SAMPLES, &s.child(2), membership)?;
                smoke_hits(joint, n, SMOKE_SAMPLES, &s.child(3), membership)?;
            }
            Experiment::OrbitSeparation { fixture, .. } => {
                let mut rng = s.rng();
                for _ in 0..SMOKE_SAMPLES {
                    let u = sample_haar_unitary(fixture.x.n(), &mut rng);
                    if !fixture.y.conjugate_by(&u).is_finite() {
                        return Err(Error::NonFinite("Haar smoke draw".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Outcome> {
        match &self.experiment {
            Experiment::Entropy { spec, n_list, samples, membership, allow_empty } => {
                let est = crate::microstates::estimate_entropy(spec, n_list, *samples, &stream(self.seed), membership)?;
                if !allow_empty {
                    if let Some(v) = est.per_n.iter().find(|v| v.hits == 0) {
                        return Err(Error::Numerical(format!(
                            "no hits at n = {} in {} samples (log-volume is -inf); set allow_empty to accept",
                            v.n, v.samples
                        )));
                    }
                }
                let mut t = Table::new(vec!["n", "samples", "hits", "boundary", "log_vol", "h_n", "h_ci"]);
                for v in &est.per_n {
                    t.push(vec![
                        v.n.to_string(),
                        v.samples.to_string(),
                        v.hits.to_string(),
                        v.boundary.to_string(),
                        num(v.log_vol),
                        num(v.h),
                        num(v.h_ci),
                    ]);
                }
                Ok(Outcome { result: json!({ "spec": spec, "estimate": est }), table: t })
            }
            Experiment::Freeness { base_x, base_y, cfg } => {
                let r = asymptotic_freeness_experiment(base_x, base_y, cfg)?;
                let mut t = Table::new(vec!["n", "mean_deviation", "max_deviation", "exceed_frequency", "worst_word"]);
                for row in &r.rows {
                    t.push(vec![
                        row.n.to_string(),
                        num(row.mean_deviation),
                        num(row.max_deviation),
                        num(row.exceed_frequency),
                        row.worst_word.clone(),
                    ]);
                }
                Ok(Outcome { result: serde_json::to_value(&r)?, table: t })
            }
            Experiment::Convolve { mu, nu, cfg } => {
                let r = free_convolution_experiment(&mu.measure(cfg.n)?, &nu.measure(cfg.n)?, cfg)?;
                let mut t = Table::new(vec!["k", "oracle", "simulated", "deviation"]);
                for k in 0..r.oracle.len() {
                    t.push(vec![k.to_string(), num(r.oracle[k]), num(r.simulated[k]), num(r.deviations[k])]);
                }
                Ok(Outcome { result: serde_json::to_value(&r)?, table: t })
            }
            Experiment::Gibbs { potential, n, cfg, dyson_schwinger_g } => {
                let r = sample_gibbs_moments(potential, *n, cfg)?;
                let oracle = match dyson_schwinger_g {
                    Some(g) => Some(dyson_schwinger_quartic(*g, cfg.max_len)?),
                    None => None,
                };
                let mut t = Table::new(vec!["word", "re", "im", "ci", "ess", "oracle"]);
                for w in &r.words {
                    let self_adjoint = potential.domain() == MatrixDomain::SelfAdjoint;
                    let o = oracle
                        .as_ref()
                        .and_then(|law| univariate_word_power(&w.word, self_adjoint).and_then(|k| law.moments.get(k)));
                    t.push(vec![
                        w.word.clone(),
                        num(w.re),
                        num(w.im),
                        num(w.ci),
                        num(w.ess),
                        o.map(|&v| num(v)).unwrap_or_default(),
                    ]);
                }
                let result = json!({
                    "potential": potential,
                    "n": r.n,
                    "step": r.step,
                    "samples": r.samples,
                    "max_autocorr": r.max_autocorr,
                    "gradient_error": r.gradient_error,
                    "halvings": r.halvings,
                    "words": r.words,
                    "dyson_schwinger": oracle,
                });
                Ok(Outcome { result, table: t })
            }
            Experiment::HopfLax { potential, t, k, n, z_samples, x_scale, cfg, quadratic_c } => {
                let x = potential.sample_domain(*n, *x_scale, &mut stream(self.seed).child(0).rng());
                let norm_sq = x.hs_norm_sq();
                let seq = hopf_lax_iterate(potential, *t, *k, &x, *z_samples, cfg)?;
                let mut tab = Table::new(vec!["k", "value", "branching", "converged", "closed_form"]);
                for (i, &kk) in seq.ks.iter().enumerate() {
                    let closed = quadratic_c.map(|c| quadratic_iterated_closed_form(c, *t, kk, potential.d(), norm_sq));
                    tab.push(vec![
                        kk.to_string(),
                        num(seq.values[i]),
                        seq.branching[i].to_string(),
                        seq.converged[i].to_string(),
                        closed.map(num).unwrap_or_default(),
                    ]);
                }
                let single = quadratic_c.map(|c| quadratic_closed_form(c, *t, potential.d(), norm_sq));
                let result = json!({
                    "potential": potential,
                    "n": n,
                    "x_norm_sq": norm_sq,
                    "z_samples": z_samples,
                    "variant": cfg.variant,
                    "sequence": seq,
                    "single_step_closed_form": single,
                });
                Ok(Outcome { result, table: tab })
            }
            Experiment::Wasserstein { n, pairs, opt } => {
                let root = stream(self.seed);
                let mut t = Table::new(vec!["pair", "matrix", "oracle", "abs_diff", "converged"]);
                let mut rows = Vec::with_capacity(*pairs);
                let mut worst: f64 = 0.0;
                for i in 0..*pairs {
                    let mut rng = root.child(i as u64).rng();
                    let x = sample_gue(*n, &mut rng);
                    let y = sample_gue(*n, &mut rng);
                    let w = wasserstein_matrix(&x, &y, &opt.with_seed(root.child(i as u64).child(1)))?;
                    let o = spectral_oracle(&x, &y)?;
                    let diff = (w.value - o).abs();
                    worst = worst.max(diff);
                    t.push(vec![i.to_string(), num(w.value), num(o), num(diff), w.converged.to_string()]);
                    rows.push(json!({ "matrix": w.value, "oracle": o, "abs_diff": diff, "converged": w.converged }));
                }
                Ok(Outcome { result: json!({ "n": n, "pairs": rows, "max_abs_diff": worst }), table: t })
            }
            Experiment::Specht { source, max_len, bound } => {
                let (x, y) = specht_pair(source, &stream(self.seed))?;
                let n = x.n();
                let r = specht_equivalent_with(&x, &y, *max_len, bound.unwrap_or(n * n))?;
                let mut t = Table::new(vec![
                    "verdict",
                    "max_len",
                    "sufficiency_bound",
                    "words_checked",
                    "span_dim",
                    "stabilized_at",
                    "mismatch_word",
                    "mismatch_deviation",
                ]);
                let verdict = serde_json::to_value(r.verdict)?;
                t.push(vec![
                    verdict.as_str().unwrap_or_default().to_string(),
                    r.max_len.to_string(),
                    r.sufficiency_bound.to_string(),
                    r.words_checked.to_string(),
                    r.span_dim.to_string(),
                    r.stabilized_at.map(|v| v.to_string()).unwrap_or_default(),
                    r.first_mismatch.as_ref().map(|m| m.word.clone()).unwrap_or_default(),
                    r.first_mismatch.as_ref().map(|m| num(m.deviation)).unwrap_or_default(),
                ]);
                Ok(Outcome { result: json!({ "n": n, "d": x.d(), "report": r }), table: t })
            }
            Experiment::IndependentJoin { spec1, spec2, joint, n, mcmc, membership, additivity, cross } => {
                let ratio = independent_join_ratio(spec1, spec2, joint, *n, mcmc, membership)?;
                let mut t =
                    Table::new(vec!["estimator", "n", "ratio", "ci", "h1", "h2", "h_joint", "deficit", "pairs_checked"]);
                let blank = String::new;
                t.push(vec![
                    "mcmc".into(),
                    n.to_string(),
                    num(ratio.ratio),
                    num(ratio.ci),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    ratio.samples.to_string(),
                ]);
                let add = match additivity {
                    Some(a) => {
                        let cross_constraints = &joint.constraints[spec1.constraints.len() + spec2.constraints.len()..];
                        let r = entropy_additivity_experiment(spec1, spec2, cross_constraints, a)?;
                        for row in &r.rows {
                            t.push(vec![
                                "importance".into(),
                                row.n.to_string(),
                                num(row.ratio),
                                blank(),
                                num(row.h1),
                                num(row.h2),
                                num(row.h_joint),
                                num(row.deficit),
                                row.pairs_checked.to_string(),
                            ]);
                        }
                        Some(r)
                    }
                    None => None,
                };
                let result = json!({
                    "joint": joint,
                    "cross_constraints": cross,
                    "join_ratio": ratio,
                    "additivity": add,
                });
                Ok(Outcome { result, table: t })
            }
            Experiment::OrbitSeparation { fixture, cfg } => {
                let r = orbit_separation_experiment(fixture, cfg)?;
                let mut t = Table::new(vec!["trial", "psi_a", "psi_b"]);
                for (i, (a, b)) in r.a.psi.iter().zip(&r.b.psi).enumerate() {
                    t.push(vec![i.to_string(), num(*a), num(*b)]);
                }
                Ok(Outcome { result: serde_json::to_value(&r)?, table: t })
            }
        }
    }
}

/// `k` for words `x1 x1 … x1` (the empty word is `1`); adjoint letters
/// count as `x1` when `x1` is self-adjoint.
fn univariate_word_power(word: &str, self_adjoint: bool) -> Option<usize> {
    if word == "1" {
        return Some(0);
    }
    let parts: Vec<&str> = word.split_whitespace().collect();
    parts.iter().all(|&p| p == "x1" || (self_adjoint && p == "x1*")).then_some(parts.len())
}

fn specht_pair(source: &SpechtSource, s: &RngStream) -> Result<(MatrixTuple, MatrixTuple)> {
    match source {
        SpechtSource::Conjugate { n, d } => {
            let mut rng = s.child(5).rng();
            let x = sample_ginibre(*n, *d, &mut rng);
            let u = sample_haar_unitary(*n, &mut rng);
            let y = x.conjugate_by(&u);
            Ok((x, y))
        }
        SpechtSource::CubicFixture => Ok(cubic_mismatch_fixture()),
        SpechtSource::Spectra { x, y } => Ok((
            MatrixTuple::single(ComplexMatrix::from_real_diagonal(x)),
            MatrixTuple::single(ComplexMatrix::from_real_diagonal(y)),
        )),
    }
}

/// Gradient gate plus [`SMOKE_SAMPLES`] Langevin steps from the origin.
fn smoke_potential(potential: &Potential, n: usize, step: Option<f64>, s: &RngStream) -> Result<()> {
    let err = potential.gradient_check(n, s)?;
    if err > GRADIENT_CHECK_TOL {
        return Err(Error::Numerical(format!("gradient check failed: relative error {err:e}")));
    }
    let eps = step.unwrap_or_else(|| crate::gibbs::default_step(potential));
    let mut state = LangevinState::new(MatrixTuple::zeros(n, potential.d()), eps / (n * n) as f64)?;
    let mut rng = s.child(1).rng();
    for _ in 0..SMOKE_SAMPLES {
        state = langevin_step(&state, potential, &mut rng)?;
    }
    if !state.x.is_finite() {
        return Err(Error::NonFinite("Langevin smoke run".into()));
    }
    Ok(())
}
