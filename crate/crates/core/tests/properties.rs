//! Randomized invariants across modules. Objects are drawn from seeded
//! streams so a failing case is reproducible from its shrunk seed.

use mslab::freeness::{asymptotic_freeness_experiment, free_convolution_experiment, BaseSpec, ConvolutionConfig, FreenessConfig};
use mslab::gibbs::{hopf_lax_step, langevin_step, HopfLaxConfig, LangevinState, Potential};
use mslab::matrix::{
    operator_norm, sample_ginibre, sample_gue, sample_haar_unitary, MatrixDomain, MatrixTuple, RngStream,
};
use mslab::microstates::{
    estimate_entropy, estimate_volume, is_microstate, Constraint, MembershipConfig, NeighborhoodSpec, SpecKind, Verdict,
};
use mslab::moments::{cumulants_to_moments, free_convolve, free_product_moments, moments_to_cumulants, MomentVector};
use mslab::ncpoly::{eval_formula, parse_formula, EvalConfig};
use mslab::optimize::OptConfig;
use mslab::transport::{psi_distance, specht_equivalent, wasserstein_spectral, SpechtVerdict, SpectralMeasure};
use proptest::prelude::*;
use rand::Rng;

fn tuple(seed: u64, n: usize, d: usize) -> MatrixTuple {
    sample_ginibre(n, d, &mut RngStream::new(seed, 0).rng())
}

fn qf_spec(r: f64, domain: MatrixDomain, cs: &[(&str, f64, f64)]) -> NeighborhoodSpec {
    let constraints = cs.iter().map(|&(f, t, e)| Constraint::new(f, t, e).unwrap()).collect();
    NeighborhoodSpec::new(1, r, SpecKind::QuantifierFree, constraints).unwrap().with_domain(domain)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hs_inner_and_trace_property(seed in any::<u64>(), n in 1usize..7) {
        let x = tuple(seed, n, 2);
        let ip = x.hs_inner(&x).unwrap();
        prop_assert!(ip.im.abs() < 1e-12 && ip.re >= 0.0);
        prop_assert_eq!(MatrixTuple::zeros(n, 2).hs_norm_sq(), 0.0);
        let (a, b) = (x.get(0), x.get(1));
        prop_assert!((a.trace_of_product(b) - b.trace_of_product(a)).norm() < 1e-12);
        prop_assert!(operator_norm(a) >= a.hs_norm() * (1.0 - 1e-10));
    }

    #[test]
    fn haar_conjugation_preserves_word_traces(seed in any::<u64>(), n in 2usize..6) {
        let x = tuple(seed, n, 2);
        let u = sample_haar_unitary(n, &mut RngStream::new(seed, 1).rng());
        let a = MomentVector::from_tuple(&x, 6).unwrap();
        let b = MomentVector::from_tuple(&x.conjugate_by(&u), 6).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
    }

    #[test]
    fn basic_formulas_are_direct_traces(seed in any::<u64>(), n in 2usize..6) {
        let x = tuple(seed, n, 2);
        let v = eval_formula(&parse_formula("tr.re(x1 x2*) - 2 * tr.im(x2 x1)").unwrap(), &x, &EvalConfig::default()).unwrap().value;
        let direct = x.get(0).trace_of_product(&x.get(1).adjoint()).re - 2.0 * x.get(1).trace_of_product(x.get(0)).im;
        prop_assert!((v - direct).abs() < 1e-12);
        // conjugation invariance of a quantifier-free formula
        let u = sample_haar_unitary(n, &mut RngStream::new(seed, 2).rng());
        let w = eval_formula(&parse_formula("tr.re(x1 x2*) - 2 * tr.im(x2 x1)").unwrap(), &x.conjugate_by(&u), &EvalConfig::default()).unwrap().value;
        prop_assert!((v - w).abs() < 1e-10);
    }

    #[test]
    fn formulas_print_and_reparse(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 3).rng();
        let word: Vec<String> = (0..rng.random_range(1..5)).map(|_| format!("x{}{}", rng.random_range(1..3), if rng.random_bool(0.5) { "*" } else { "" })).collect();
        let src = format!("max(tr.re({} + 0.5i x1), -1) * sqrt(tr.re(x1 x1*) + 2)", word.join(" "));
        let phi = parse_formula(&src).unwrap();
        prop_assert_eq!(parse_formula(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn cumulant_round_trip(seed in any::<u64>(), d in 1usize..3, len in 1usize..7) {
        let x = tuple(seed, 3, d).scale(0.8);
        let mv = MomentVector::from_tuple(&x, len).unwrap();
        let back = cumulants_to_moments(&moments_to_cumulants(&mv));
        prop_assert!(back.max_abs_diff(&mv).unwrap() < 1e-12);
    }

    #[test]
    fn free_product_restricts_to_the_factors(seed in any::<u64>()) {
        let a = MomentVector::from_tuple(&tuple(seed, 3, 1), 4).unwrap();
        let b = MomentVector::from_tuple(&tuple(seed ^ 1, 3, 1), 4).unwrap();
        let joint = free_product_moments(&a, &b, 4).unwrap();
        for (w, v) in a.iter() {
            prop_assert!((joint.get(&w).unwrap() - v).norm() < 1e-12);
        }
    }
}

fn spectral_moments(seed: u64, k: u64, len: usize) -> MomentVector {
    let eig = mslab::matrix::hermitian_eigenvalues(&sample_gue(4, &mut RngStream::new(seed, k).rng())).unwrap();
    SpectralMeasure::uniform(&eig).unwrap().moments(len).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn free_convolution_commutes_and_associates(seed in any::<u64>()) {
        let (a, b, c) = (spectral_moments(seed, 0, 6), spectral_moments(seed, 1, 6), spectral_moments(seed, 2, 6));
        let ab = free_convolve(&a, &b, 6).unwrap();
        prop_assert!(ab.max_abs_diff(&free_convolve(&b, &a, 6).unwrap()).unwrap() < 1e-12);
        let left = free_convolve(&ab, &c, 6).unwrap();
        let right = free_convolve(&a, &free_convolve(&b, &c, 6).unwrap(), 6).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12 * left.iter().map(|(_, v)| v.norm()).fold(1.0, f64::max));
    }

    #[test]
    fn loosening_never_loses_microstates(seed in any::<u64>(), tol in 0.05f64..0.5, extra in 0.0f64..0.5, n in 2usize..6) {
        let sa = MatrixDomain::SelfAdjoint;
        let cs = |t: f64| [("tr.re(x1 x1)", 1.0, t), ("tr.re(x1 x1 x1 x1)", 2.0, 2.0 * t)];
        let inner = qf_spec(3.0, sa, &cs(tol));
        let outer = qf_spec(3.0 + extra, sa, &cs(tol + extra));
        let cfg = MembershipConfig::default();
        let mut rng = RngStream::new(seed, 4).rng();
        for _ in 0..200 {
            let x = MatrixTuple::single(sample_gue(n, &mut rng));
            if is_microstate(&x, &inner, &cfg).unwrap() == Verdict::In {
                prop_assert_eq!(is_microstate(&x, &outer, &cfg).unwrap(), Verdict::In);
            }
        }
    }

    #[test]
    fn redundant_radius_leaves_hits_unchanged(seed in any::<u64>(), n in 2usize..6) {
        // tr(x²) < 1.2 already forces ‖x‖_op ≤ √(1.2 n)
        let cs = [("tr.re(x1 x1)", 1.0, 0.2)];
        let r0 = (1.2 * n as f64).sqrt() + 1e-6;
        let sa = MatrixDomain::SelfAdjoint;
        let cfg = MembershipConfig::default();
        let stream = RngStream::new(seed, 5);
        let a = estimate_volume(&qf_spec(r0, sa, &cs), n, 2_000, &stream, &cfg).unwrap();
        let b = estimate_volume(&qf_spec(4.0 * r0, sa, &cs), n, 2_000, &stream, &cfg).unwrap();
        prop_assert_eq!(a.hits, b.hits);
        prop_assert_eq!(a.log_vol.to_bits(), b.log_vol.to_bits());
    }

    #[test]
    fn quantifier_free_and_full_kinds_agree_bitwise(seed in any::<u64>()) {
        let qf = qf_spec(3.0, MatrixDomain::General, &[("tr.re(x1 x1*)", 1.0, 0.3)]);
        let full = NeighborhoodSpec { kind: SpecKind::Full, ..qf.clone() };
        let cfg = MembershipConfig::default();
        let stream = RngStream::new(seed, 6);
        let a = estimate_entropy(&qf, &[2, 3], 2_000, &stream, &cfg).unwrap();
        let b = estimate_entropy(&full, &[2, 3], 2_000, &stream, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn psi_reverse_triangle_and_conjugate_pairs(seed in any::<u64>(), n in 2usize..5) {
        let x = tuple(seed, n, 2);
        let y = tuple(seed ^ 7, n, 2);
        let cfg = OptConfig { starts: 2, ..OptConfig::default() };
        let psi = psi_distance(&x, &y, &cfg).unwrap().value;
        prop_assert!(psi >= (x.hs_norm() - y.hs_norm()).abs() - 1e-9);
        let z = x.conjugate_by(&sample_haar_unitary(n, &mut RngStream::new(seed, 8).rng()));
        prop_assert_ne!(specht_equivalent(&x, &z, 4).unwrap().verdict, SpechtVerdict::Distinct);
    }

    #[test]
    fn spectral_wasserstein_is_a_metric_on_samples(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 9).rng();
        let mut measure = || {
            let pts: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random_range(-2.0..2.0)).collect();
            SpectralMeasure::uniform(&pts).unwrap()
        };
        let (a, b, c) = (measure(), measure(), measure());
        let ab = wasserstein_spectral(&a, &b).unwrap();
        prop_assert!(wasserstein_spectral(&a, &a).unwrap() < 1e-12);
        prop_assert!((ab - wasserstein_spectral(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= wasserstein_spectral(&a, &c).unwrap() + wasserstein_spectral(&c, &b).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn langevin_keeps_self_adjointness(seed in any::<u64>(), g in 0.0f64..0.3) {
        let p = Potential::quartic(g).unwrap();
        let mut rng = RngStream::new(seed, 10).rng();
        let mut s = LangevinState::new(MatrixTuple::single(sample_gue(6, &mut rng)), 0.01 / 36.0).unwrap();
        for _ in 0..20 {
            s = langevin_step(&s, &p, &mut rng).unwrap();
            prop_assert!(s.x.get(0).hermitian_defect() < 1e-10);
        }
    }

    #[test]
    fn hopf_lax_is_monotone_and_below_the_diffusion_bound(seed in any::<u64>(), c1 in 0.2f64..2.0, dc in 0.0f64..1.0, t in 0.05f64..1.0) {
        let x = tuple(seed, 4, 1);
        let cfg = HopfLaxConfig::default();
        let p1 = Potential::quadratic(c1, 1, MatrixDomain::General).unwrap();
        let p2 = Potential::quadratic(c1 + dc, 1, MatrixDomain::General).unwrap();
        let v1 = hopf_lax_step(&p1, t, &x, 30, &cfg).unwrap().value;
        let v2 = hopf_lax_step(&p2, t, &x, 30, &cfg).unwrap().value;
        prop_assert!(v1 <= v2 + 1e-9);
        prop_assert!(v1 <= p1.value(&x).unwrap() + 2.0 * c1 * t + 1e-9);
    }

    #[test]
    fn freeness_deviations_are_nonnegative_and_reproducible(seed in any::<u64>()) {
        let cfg = FreenessConfig { n_list: vec![8, 16], trials: 2, seed: RngStream::new(seed, 11), ..FreenessConfig::default() };
        let bx = [BaseSpec::semicircular()];
        let by = [BaseSpec::Atoms { atoms: vec![(-1.0, 0.5), (1.0, 0.5)] }];
        let a = asymptotic_freeness_experiment(&bx, &by, &cfg).unwrap();
        prop_assert!(a.rows.iter().all(|r| r.deviations.iter().all(|&d| d >= 0.0)));
        prop_assert_eq!(a, asymptotic_freeness_experiment(&bx, &by, &cfg).unwrap());
    }

    #[test]
    fn point_mass_partner_shifts_moments(seed in any::<u64>(), c in -2.0f64..2.0) {
        let eig = mslab::matrix::hermitian_eigenvalues(&sample_gue(6, &mut RngStream::new(seed, 12).rng())).unwrap();
        let mu = SpectralMeasure::uniform(&eig).unwrap();
        let shift = SpectralMeasure::new(vec![(c, 1.0)]).unwrap();
        let cfg = ConvolutionConfig { n: 6, trials: 1, max_len: 6, seed: RngStream::new(seed, 13) };
        let r = free_convolution_experiment(&mu, &shift, &cfg).unwrap();
        let m = mu.moments(6).unwrap().univariate_moments(1e-12).unwrap();
        for k in 0..=6usize {
            let mut binom = 1.0;
            let mut expected = 0.0;
            for j in 0..=k {
                expected += binom * c.powi(j as i32) * m[k - j];
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            prop_assert!((r.simulated[k] - expected).abs() < 1e-10 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn renaming_a_bound_variable_keeps_the_value(seed in any::<u64>(), r in 0.5f64..2.0) {
        let x = tuple(seed, 3, 1);
        let phi = parse_formula(&format!("sup{{y1 in D({r})}} tr.re(y1 x1 + x1* y1*)")).unwrap();
        let cfg = EvalConfig::default();
        let a = eval_formula(&phi, &x, &cfg).unwrap().value;
        let b = eval_formula(&phi.rename_bound(1, 4), &x, &cfg).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
        let wider = parse_formula(&format!("sup{{y1 in D({})}} tr.re(y1 x1 + x1* y1*)", r * 1.5)).unwrap();
        prop_assert!(a <= eval_formula(&wider, &x, &cfg).unwrap().value + 1e-6);
    }
}
