//! Limiting moments of the quartic matrix model `e^{−n² tr(x²/2 + g x⁴)}`.
//!
//! The planar loop equations `m_{k+1} + 4g m_{k+3} = Σ_{j<k} m_j m_{k−1−j}`
//! do not close on finitely many moments. With a one-cut density on
//! `[−2a, 2a]` they reduce to the fixed point `a² = 1 / (1 + 12 g a²)`, and
//! then `m_{2k} = C_k a^{2k+2} (1 + 8 g a²) + 4 g C_{k+1} a^{2k+4}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{catalan_numbers, MomentVector};

/// Largest coupling accepted.
pub const MAX_COUPLING: f64 = 0.5;
const FIXED_POINT_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuarticLaw {
    pub g: f64,
    /// Squared half-width parameter: the support is `[−2a, 2a]`.
    pub a2: f64,
    /// `m_0, …, m_{max_len}`, odd moments zero.
    pub moments: Vec<f64>,
    pub iterations: usize,
}

impl QuarticLaw {
    pub fn moment_vector(&self) -> Result<MomentVector> {
        MomentVector::self_adjoint_univariate(&self.moments)
    }

    /// Largest residual of the loop equations `k = 0, …` that only involve
    /// computed moments.
    pub fn loop_residual(&self) -> f64 {
        let m = &self.moments;
        let mut worst: f64 = 0.0;
        for k in 0..m.len().saturating_sub(3) {
            let lhs = m[k + 1] + 4.0 * self.g * m[k + 3];
            let rhs: f64 = (0..k).map(|j| m[j] * m[k - 1 - j]).sum();
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

/// Moments up to `max_len` of the quartic model, by fixed-point iteration
/// on `a²` from the Gaussian value `a² = 1`.
pub fn dyson_schwinger_quartic(g: f64, max_len: usize) -> Result<QuarticLaw> {
    if !(0.0..=MAX_COUPLING).contains(&g) {
        return Err(Error::InvalidArgument(format!("quartic coupling must lie in [0, {MAX_COUPLING}], got {g}")));
    }
    let mut a2: f64 = 1.0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let next = 1.0 / (1.0 + 12.0 * g * a2);
        let delta = (next - a2).abs();
        a2 = next;
        if delta < FIXED_POINT_TOL {
            break;
        }
        if iterations >= MAX_ITERS {
            return Err(Error::Numerical(format!("quartic fixed point did not converge for g = {g}")));
        }
    }
    let catalan = catalan_numbers(max_len / 2 + 1);
    let mut moments = vec![0.0; max_len + 1];
    for k in 0..=max_len / 2 {
        let ck = catalan[k] as f64;
        let ck1 = catalan[k + 1] as f64;
        moments[2 * k] = ck * a2.powi(k as i32 + 1) * (1.0 + 8.0 * g * a2) + 4.0 * g * ck1 * a2.powi(k as i32 + 2);
    }
    moments[0] = 1.0;
    Ok(QuarticLaw { g, a2, moments, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_limit_is_semicircle() {
        let law = dyson_schwinger_quartic(0.0, 8).unwrap();
        assert_eq!(law.moments, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0, 0.0, 14.0]);
    }

    #[test]
    fn closed_form_second_moment() {
        // a² is the positive root of 12 g a⁴ + a² − 1 = 0 and m₂ = a²(4 − a²)/3
        let g = 0.1;
        let law = dyson_schwinger_quartic(g, 4).unwrap();
        let a2 = (-1.0 + (1.0 + 48.0 * g).sqrt()) / (24.0 * g);
        assert!((law.a2 - a2).abs() < 1e-9);
        assert!((law.moments[2] - a2 * (4.0 - a2) / 3.0).abs() < 1e-9);
        assert!((law.moments[2] - 0.66763).abs() < 1e-5);
    }

    #[test]
    fn loop_equations_hold() {
        for g in [0.0, 0.05, 0.1, 0.3, 0.5] {
            let law = dyson_schwinger_quartic(g, 12).unwrap();
            assert!(law.loop_residual() < 1e-9, "g = {g}: {}", law.loop_residual());
            // first equation: m₂ + 4g m₄ = 1
            assert!((law.moments[2] + 4.0 * g * law.moments[4] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn second_moment_decreases_in_coupling() {
        let m2: Vec<f64> =
            (0..=10).map(|k| dyson_schwinger_quartic(0.05 * k as f64, 2).unwrap().moments[2]).collect();
        assert!(m2.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn out_of_range_coupling() {
        assert!(dyson_schwinger_quartic(0.6, 4).is_err());
        assert!(dyson_schwinger_quartic(-0.1, 4).is_err());
    }
}
