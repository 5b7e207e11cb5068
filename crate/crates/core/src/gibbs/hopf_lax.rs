//! Discrete Hopf–Lax semigroup
//! `Φ_t V(X) = inf_A E[V(X + A + Z_t)] + ‖A‖₂² / 2t`, with `Z_t` Gaussian,
//! `E‖Z_t‖₂² = 2td`.
//!
//! The `k`-fold composition `(Φ_{t/k})^k V(X)` is the value of a `k`-stage
//! control problem: stage `j` picks `A_j` knowing `Z_1, …, Z_{j−1}`. It is
//! solved on a scenario tree with `m` children per node, sibling noises in
//! antithetic pairs, as one joint minimization over all node controls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::matrix::{MatrixTuple, RngStream};
use crate::optimize::{minimize_over_ball, OptConfig};

/// Where the infimum sits relative to the expectation over `Z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfLaxVariant {
    /// `inf_A E[V(X + A + Z)] + ‖A‖²/2t`.
    #[default]
    Expectation,
    /// `E[inf_A V(X + A + Z) + ‖A‖²/2t]`.
    PerSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfLaxConfig {
    pub opt: OptConfig,
    pub variant: HopfLaxVariant,
    /// Leaf budget for iterated trees; the branching is the largest even
    /// `m` with `m^k` within it.
    pub max_leaves: usize,
}

impl Default for HopfLaxConfig {
    fn default() -> Self {
        Self {
            opt: OptConfig { starts: 1, max_iters: 2000, ..OptConfig::default() },
            variant: HopfLaxVariant::Expectation,
            max_leaves: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfLaxValue {
    pub value: f64,
    /// First-stage control (averaged over first-stage nodes for the
    /// per-sample variant).
    #[serde(skip)]
    pub witness: MatrixTuple,
    pub stages: usize,
    pub branching: usize,
    pub leaves: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfLaxSequence {
    pub t: f64,
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
    pub branching: Vec<usize>,
    pub converged: Vec<bool>,
}

/// Scenario tree: `levels[j]` holds the noises of the `m^{j+1}` depth-`j+1`
/// nodes; node `i` at depth `j+1` has parent `i / m` at depth `j`.
struct Tree {
    m: usize,
    stages: usize,
    noise: Vec<Vec<MatrixTuple>>,
}

impl Tree {
    fn build(potential: &Potential, n: usize, s: f64, m: usize, stages: usize, seed: &RngStream) -> Self {
        let mut noise = Vec::with_capacity(stages);
        let mut count = 1;
        for depth in 0..stages {
            count *= m;
            let level_seed = seed.child(depth as u64);
            let level: Vec<MatrixTuple> = (0..count)
                .into_par_iter()
                .map(|i| {
                    // children 2q and 2q+1 of a node share a draw with opposite
                    // signs; with odd m the last child is unpaired
                    let odd = (i % m) % 2;
                    let mut rng = level_seed.child((i - odd) as u64).rng();
                    let z = potential.sample_domain(n, (2.0 * s).sqrt(), &mut rng);
                    if odd == 1 {
                        z.scale(-1.0)
                    } else {
                        z
                    }
                })
                .collect();
            noise.push(level);
        }
        Self { m, stages, noise }
    }

    fn leaves(&self) -> usize {
        self.m.pow(self.stages as u32)
    }
}

/// Node controls are stored scaled by `√p` (node probability), which gives
/// every block the same curvature.
struct Layout {
    /// `(depth, count, offset)` per controlled level.
    levels: Vec<(usize, usize, usize)>,
    total: usize,
}

impl Layout {
    fn new(tree: &Tree, variant: HopfLaxVariant) -> Self {
        let first_depth = match variant {
            HopfLaxVariant::Expectation => 0,
            HopfLaxVariant::PerSample => 1,
        };
        let mut levels = Vec::new();
        let mut offset = 0;
        for depth in first_depth..first_depth + tree.stages {
            let count = tree.m.pow(depth as u32);
            levels.push((depth, count, offset));
            offset += count;
        }
        Self { levels, total: offset }
    }
}

fn tree_objective(
    potential: &Potential,
    x: &MatrixTuple,
    tree: &Tree,
    layout: &Layout,
    s: f64,
    b: &MatrixTuple,
) -> Result<(f64, MatrixTuple)> {
    let d = x.d();
    let block = |k: usize| -> MatrixTuple { MatrixTuple::new(b.mats()[k * d..(k + 1) * d].to_vec()).expect("block") };
    let m = tree.m;
    // positions down the tree
    let mut pos = vec![x.clone()];
    for depth in 0..=tree.stages {
        if depth > 0 {
            let z = &tree.noise[depth - 1];
            pos = (0..z.len()).into_par_iter().map(|i| pos[i / m].add(&z[i])).collect();
        }
        if let Some(&(_, count, offset)) = layout.levels.iter().find(|l| l.0 == depth) {
            let scale = (count as f64).sqrt();
            pos = pos
                .into_par_iter()
                .enumerate()
                .map(|(i, mut p)| {
                    p.axpy(scale, &block(offset + i));
                    p
                })
                .collect();
        }
    }
    let leaves = pos.len();
    let evals: Vec<Result<(f64, MatrixTuple)>> = pos.par_iter().map(|p| potential.value_grad(p)).collect();
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(leaves);
    for e in evals {
        let (v, g) = e?;
        value += v;
        grads.push(g);
    }
    value /= leaves as f64;
    // subtree gradient sums, from the leaves up
    let mut out = MatrixTuple::zeros(x.n(), d * layout.total);
    let mut sums = grads;
    for depth in (0..=tree.stages).rev() {
        if let Some(&(_, count, offset)) = layout.levels.iter().find(|l| l.0 == depth) {
            let scale = (count as f64).sqrt() / leaves as f64;
            for (i, g) in sums.iter().enumerate() {
                for j in 0..d {
                    let dst = &mut out.mats_mut()[(offset + i) * d + j];
                    dst.axpy(num_complex::Complex64::new(scale, 0.0), g.get(j));
                }
            }
        }
        if depth > 0 {
            let parents = sums.len() / m;
            sums = (0..parents)
                .into_par_iter()
                .map(|p| {
                    let mut acc = sums[p * m].clone();
                    for c in 1..m {
                        acc = acc.add(&sums[p * m + c]);
                    }
                    acc
                })
                .collect();
        }
    }
    value += b.hs_norm_sq() / (2.0 * s);
    out.axpy(1.0 / s, b);
    Ok((value, out))
}

fn solve(
    potential: &Potential,
    t: f64,
    stages: usize,
    m: usize,
    x: &MatrixTuple,
    cfg: &HopfLaxConfig,
) -> Result<HopfLaxValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("Hopf–Lax time must be positive, got {t}")));
    }
    if x.d() != potential.d() {
        return Err(Error::DimensionMismatch(format!("potential has {} variables, tuple has {}", potential.d(), x.d())));
    }
    let s = t / stages as f64;
    let n = x.n();
    let tree = Tree::build(potential, n, s, m, stages, &cfg.opt.seed.child(stages as u64));
    let layout = Layout::new(&tree, cfg.variant);
    let radius = 10.0 * x.max_operator_norm() + 10.0;
    let obj = |b: &MatrixTuple| tree_objective(potential, x, &tree, &layout, s, b);
    let opt = cfg.opt.with_seed(cfg.opt.seed.child(u64::MAX - stages as u64));
    let res = minimize_over_ball(&obj, radius, n, x.d() * layout.total, &opt, &[])?;
    let (_, count, offset) = layout.levels[0];
    let mut witness = MatrixTuple::zeros(n, x.d());
    let d = x.d();
    for i in 0..count {
        let blockm = MatrixTuple::new(res.witness.mats()[(offset + i) * d..(offset + i + 1) * d].to_vec())?;
        witness.axpy((count as f64).sqrt() / count as f64, &blockm);
    }
    Ok(HopfLaxValue { value: res.value, witness, stages, branching: m, leaves: tree.leaves(), converged: res.converged })
}

/// One step `Φ_t V(X)` with `z_samples` draws of `Z_t`.
pub fn hopf_lax_step(
    potential: &Potential,
    t: f64,
    x: &MatrixTuple,
    z_samples: usize,
    cfg: &HopfLaxConfig,
) -> Result<HopfLaxValue> {
    if z_samples == 0 {
        return Err(Error::InvalidArgument("z_samples must be at least 1".into()));
    }
    solve(potential, t, 1, z_samples, x, cfg)
}

/// Largest even branching `m ≥ 2` with `m^k ≤ max_leaves`.
pub fn tree_branching(k: usize, max_leaves: usize) -> usize {
    let mut m = 2;
    while (m + 2usize).checked_pow(k as u32).is_some_and(|l| l <= max_leaves) {
        m += 2;
    }
    m
}

/// `(Φ_{t/k})^k V(X)` for `k ∈ {1, 2, 4, …}` up to `k` (and `k` itself). The
/// `k = 1` entry is [`hopf_lax_step`] with `z_samples` draws.
pub fn hopf_lax_iterate(
    potential: &Potential,
    t: f64,
    k: usize,
    x: &MatrixTuple,
    z_samples: usize,
    cfg: &HopfLaxConfig,
) -> Result<HopfLaxSequence> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut ks = Vec::new();
    let mut j = 1;
    while j < k {
        ks.push(j);
        j *= 2;
    }
    ks.push(k);
    let mut seq = HopfLaxSequence { t, ks: ks.clone(), values: Vec::new(), branching: Vec::new(), converged: Vec::new() };
    for &j in &ks {
        let v = if j == 1 {
            hopf_lax_step(potential, t, x, z_samples, cfg)?
        } else {
            solve(potential, t, j, tree_branching(j, cfg.max_leaves), x, cfg)?
        };
        seq.values.push(v.value);
        seq.branching.push(v.branching);
        seq.converged.push(v.converged);
    }
    Ok(seq)
}

/// Closed form of `Φ_t` for `V = c‖X‖₂²` (expectation variant):
/// `c‖X‖₂²/(1 + 2tc) + 2ctd`.
pub fn quadratic_closed_form(c: f64, t: f64, d: usize, norm_sq: f64) -> f64 {
    c * norm_sq / (1.0 + 2.0 * t * c) + 2.0 * c * t * d as f64
}

/// `k`-fold composition for `V = c‖X‖₂²`: the coefficient follows
/// `c ← c/(1 + 2sc)` and the offsets `2 c_j s d` add up.
pub fn quadratic_iterated_closed_form(c: f64, t: f64, k: usize, d: usize, norm_sq: f64) -> f64 {
    let s = t / k as f64;
    let mut coef = c;
    let mut offset = 0.0;
    for _ in 0..k {
        offset += 2.0 * coef * s * d as f64;
        coef /= 1.0 + 2.0 * s * coef;
    }
    coef * norm_sq + offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{sample_ginibre, MatrixDomain};

    fn setup(n: usize, d: usize) -> MatrixTuple {
        sample_ginibre(n, d, &mut RngStream::new(10, 1).rng())
    }

    #[test]
    fn single_step_matches_closed_form() {
        let c = 1.0;
        let t = 0.5;
        let p = Potential::quadratic(c, 1, MatrixDomain::General).unwrap();
        let x = setup(8, 1);
        let r = hopf_lax_step(&p, t, &x, 1000, &HopfLaxConfig::default()).unwrap();
        let exact = quadratic_closed_form(c, t, 1, x.hs_norm_sq());
        assert!((r.value - exact).abs() / exact < 1e-2, "{} vs {exact}", r.value);
        let mut a = x.scale(-2.0 * t * c / (1.0 + 2.0 * t * c));
        a.axpy(-1.0, &r.witness);
        assert!(a.hs_norm() / x.hs_norm() < 1e-2);
    }

    #[test]
    fn small_time_recovers_potential() {
        let p = Potential::quadratic(1.0, 2, MatrixDomain::General).unwrap();
        let x = setup(6, 2);
        let r = hopf_lax_step(&p, 1e-4, &x, 20, &HopfLaxConfig::default()).unwrap();
        let v = p.value(&x).unwrap();
        assert!((r.value - v).abs() / v < 1e-2);
    }

    #[test]
    fn iterates_follow_coefficient_recursion() {
        let c = 1.0;
        let t = 0.5;
        let p = Potential::quadratic(c, 1, MatrixDomain::General).unwrap();
        let x = setup(12, 1);
        let cfg = HopfLaxConfig::default();
        let seq = hopf_lax_iterate(&p, t, 4, &x, 256, &cfg).unwrap();
        let at_zero = hopf_lax_iterate(&p, t, 4, &MatrixTuple::zeros(12, 1), 256, &cfg).unwrap();
        assert_eq!(seq.ks, vec![1, 2, 4]);
        for (k, (&v, &v0)) in seq.ks.iter().zip(seq.values.iter().zip(&at_zero.values)) {
            let exact = quadratic_iterated_closed_form(c, t, *k, 1, x.hs_norm_sq());
            assert!((v - exact).abs() / exact < 2e-2, "k={k}: {v} vs {exact}");
            // the X-dependent part c‖X‖²/(1 + 2tc) is the same for every k
            let part = c * x.hs_norm_sq() / (1.0 + 2.0 * t * c);
            assert!(((v - v0) - part).abs() / part < 2e-2, "k={k}: {} vs {part}", v - v0);
        }
    }

    #[test]
    fn iterated_closed_form_telescopes_coefficient() {
        // the coefficient recursion telescopes to c/(1 + 2tc)
        let (c, t): (f64, f64) = (0.7, 0.9);
        let mut coef = c;
        for _ in 0..8 {
            coef /= 1.0 + 2.0 * (t / 8.0) * coef;
        }
        assert!((coef - c / (1.0 + 2.0 * t * c)).abs() < 1e-14);
        assert!((quadratic_iterated_closed_form(c, t, 1, 2, 3.0) - quadratic_closed_form(c, t, 2, 3.0)).abs() < 1e-14);
    }

    #[test]
    fn monotone_in_the_potential() {
        let x = setup(6, 1);
        let cfg = HopfLaxConfig::default();
        let v1 = hopf_lax_step(&Potential::quadratic(1.0, 1, MatrixDomain::General).unwrap(), 0.3, &x, 40, &cfg).unwrap();
        let v2 = hopf_lax_step(&Potential::quadratic(2.0, 1, MatrixDomain::General).unwrap(), 0.3, &x, 40, &cfg).unwrap();
        assert!(v1.value <= v2.value + 1e-9);
    }

    #[test]
    fn below_potential_plus_diffusion() {
        let c = 1.0;
        let p = Potential::quadratic(c, 1, MatrixDomain::General).unwrap();
        let x = setup(6, 1);
        let mut last = f64::INFINITY;
        for t in [0.1, 0.3, 0.9] {
            let r = hopf_lax_step(&p, t, &x, 40, &HopfLaxConfig::default()).unwrap();
            assert!(r.value <= p.value(&x).unwrap() + 2.0 * c * t + 1e-9);
            let reduced = r.value - 2.0 * c * t;
            assert!(reduced <= last + 1e-9);
            last = reduced;
        }
    }

    #[test]
    fn per_sample_variant_is_not_larger() {
        // inf inside the expectation can only lower the value
        let c = 1.0;
        let t = 0.5;
        let p = Potential::quadratic(c, 1, MatrixDomain::General).unwrap();
        let x = setup(10, 1);
        let e = hopf_lax_step(&p, t, &x, 100, &HopfLaxConfig::default()).unwrap();
        let cfg = HopfLaxConfig { variant: HopfLaxVariant::PerSample, ..HopfLaxConfig::default() };
        let s = hopf_lax_step(&p, t, &x, 100, &cfg).unwrap();
        assert!(s.value <= e.value + 1e-9);
        // closed form of the per-sample variant: E c‖X + Z‖²/(1 + 2tc)
        let exact = (c * x.hs_norm_sq() + 2.0 * c * t) / (1.0 + 2.0 * t * c);
        assert!((s.value - exact).abs() / exact < 2e-2, "{} vs {exact}", s.value);
    }

    #[test]
    fn branching_rule() {
        assert_eq!(tree_branching(2, 4096), 64);
        assert_eq!(tree_branching(4, 4096), 8);
        assert_eq!(tree_branching(8, 4096), 2);
        assert_eq!(tree_branching(3, 512), 8);
    }
}
