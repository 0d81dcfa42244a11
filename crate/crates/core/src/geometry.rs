//! `Ψ(π) = (1-2π) ln(π/(1-π))`, `H(π; K) = g(π) - KΨ(π)` and the
//! free-boundary equation `g'(π) = KΨ'(π)`.
//!
//! `Ψ` is the fundamental solution behind both the expected exit time of the
//! posterior from a symmetric interval and the continuation-region part of
//! the value function. The global minimisers of `H(·; K)` on `(0, 1)` are the
//! optimal stopping boundaries.

use crate::error::{check_open_unit, Error, Result};
use crate::math::{bisect, logit};
use crate::penalty::PenaltyModel;

/// Grid used to locate the leftmost sign change of `g' - KΨ'` on `(0, 1/2)`.
pub const BOUNDARY_SCAN_POINTS: usize = 4096;
/// Absolute tolerance on the boundary in `π`.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub fn psi(pi: f64) -> Result<f64> {
    check_open_unit("pi", pi)?;
    Ok(psi_unchecked(pi))
}

pub fn psi1(pi: f64) -> Result<f64> {
    check_open_unit("pi", pi)?;
    Ok(psi1_unchecked(pi))
}

pub fn psi2(pi: f64) -> Result<f64> {
    check_open_unit("pi", pi)?;
    Ok(psi2_unchecked(pi))
}

pub(crate) fn psi_unchecked(pi: f64) -> f64 {
    (1.0 - 2.0 * pi) * logit(pi)
}

pub(crate) fn psi1_unchecked(pi: f64) -> f64 {
    (1.0 - 2.0 * pi) / (pi * (1.0 - pi)) - 2.0 * logit(pi)
}

pub(crate) fn psi2_unchecked(pi: f64) -> f64 {
    let s = pi * (1.0 - pi);
    -1.0 / (s * s)
}

/// `H(π; K) = g(π) - KΨ(π)`.
pub fn eval_h(penalty: &PenaltyModel, k: f64, pi: f64) -> Result<f64> {
    check_k(k)?;
    check_open_unit("pi", pi)?;
    Ok(penalty.g_unchecked(pi) - k * psi_unchecked(pi))
}

/// `H''(π; K) = g''(π) + K/(π(1-π))²`, one-sided zero curvature of `g` at
/// the classic kink.
#[cfg(test)]
pub(crate) fn h2_unchecked(penalty: &PenaltyModel, k: f64, pi: f64) -> f64 {
    penalty.g2_unchecked(pi) - k * psi2_unchecked(pi)
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "K", value: k })
    }
}

/// Convexity structure of `H(·; K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HClassification {
    pub k: f64,
    /// `H` is strictly convex on `(0, π*) ∪ (1-π*, 1)` and strictly concave
    /// in between.
    pub pi_star: f64,
    /// Whether `g'(π) = KΨ'(π)` has a root `π₀ ∈ (0, 1/2)`.
    pub has_interior_root: bool,
    pub pi_0: Option<f64>,
    /// False when a custom penalty failed the `Lg` monotonicity check, in
    /// which case the single-crossing structure above is not guaranteed.
    pub reliable: bool,
}

pub fn classify_h(penalty: &PenaltyModel, k: f64) -> Result<HClassification> {
    check_k(k)?;
    let (pi_star, has_interior_root) = if penalty.is_classic() {
        (0.5, true)
    } else {
        let g2_half = penalty.g2_unchecked(0.5);
        if g2_half >= -16.0 * k {
            (0.5, false)
        } else {
            // Sign of H'' scaled by π²(1-π)², which is Lg(π) + K.
            let scaled = |pi: f64| {
                let s = pi * (1.0 - pi);
                s * s * penalty.g2_unchecked(pi) + k
            };
            (bisect(scaled, 1e-12, 0.5, BOUNDARY_TOL)?, true)
        }
    };
    let pi_0 = if has_interior_root {
        let a = solve_boundary(penalty, k)?;
        (a < 0.5).then_some(a)
    } else {
        None
    };
    Ok(HClassification {
        k,
        pi_star,
        has_interior_root,
        pi_0,
        reliable: penalty.lg_monotone(),
    })
}

/// Smallest root in `(0, 1/2]` of `g'(π) = KΨ'(π)`.
///
/// For smooth symmetric `g` the point 1/2 always solves the equation, so
/// 1/2 is returned when there is no interior root.
pub fn solve_boundary(penalty: &PenaltyModel, k: f64) -> Result<f64> {
    check_k(k)?;
    let f = |pi: f64| penalty.g1_unchecked(pi) - k * psi1_unchecked(pi);

    if penalty.is_classic() {
        // f(1/2) = 1 with the left derivative of g; f → -∞ at 0.
        let lo = descend_to_negative(&f, 1e-9)?;
        return bisect(f, lo, 0.5, BOUNDARY_TOL);
    }

    let n = BOUNDARY_SCAN_POINTS;
    let step = 0.5 / n as f64;
    let mut prev = step;
    for i in 1..n {
        let pi = step * i as f64;
        if f(pi) > 0.0 {
            let lo = if i == 1 { descend_to_negative(&f, pi)? } else { prev };
            return bisect(f, lo, pi, BOUNDARY_TOL);
        }
        prev = pi;
    }

    // A root closer to 1/2 than one grid cell: f > 0 just left of 1/2.
    if penalty.g2_unchecked(0.5) < -16.0 * k {
        let mut h = step;
        for _ in 0..60 {
            h *= 0.5;
            let pi = 0.5 - h;
            if pi >= 0.5 {
                break;
            }
            if f(pi) > 0.0 {
                return bisect(f, prev, pi, BOUNDARY_TOL);
            }
            prev = pi;
        }
    }
    Ok(0.5)
}

fn descend_to_negative<F: Fn(f64) -> f64>(f: &F, start: f64) -> Result<f64> {
    let mut lo = start;
    for _ in 0..2000 {
        if f(lo) < 0.0 {
            return Ok(lo);
        }
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            break;
        }
    }
    Err(Error::Convergence { iterations: 2000 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Independent bisection on 1 = KΨ'(π), written out long-hand.
    fn classic_oracle(k: f64) -> f64 {
        let psi1 = |p: f64| (1.0 - 2.0 * p) / (p * (1.0 - p)) - 2.0 * (p / (1.0 - p)).ln();
        let (mut lo, mut hi) = (1e-15_f64, 0.5_f64);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - k * psi1(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(psi(0.25).unwrap(), 0.5 * (1.0f64 / 3.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(psi(0.25).unwrap(), -0.549306, epsilon = 1e-6);
        assert_eq!(psi1(0.5).unwrap(), 0.0);
        assert!(psi(0.0).is_err() && psi1(1.0).is_err() && psi2(-1.0).is_err());
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..=100 {
            let pi = 0.01 + 0.98 * i as f64 / 101.0;
            let d1 = (psi_unchecked(pi + h) - psi_unchecked(pi - h)) / (2.0 * h);
            assert!((d1 - psi1_unchecked(pi)).abs() < 1e-6);
            let d2 = (psi1_unchecked(pi + h) - psi1_unchecked(pi - h)) / (2.0 * h);
            assert!((d2 - psi2_unchecked(pi)).abs() < 1e-4 * psi2_unchecked(pi).abs().max(1.0));
        }
    }

    #[test]
    fn h_examples() {
        let classic = PenaltyModel::classic();
        assert_eq!(eval_h(&classic, 1.0, 0.5).unwrap(), 0.5);
        let l2 = PenaltyModel::l2();
        assert_abs_diff_eq!(eval_h(&l2, 0.5, 0.25).unwrap(), 0.462153, epsilon = 1e-6);
        assert!(eval_h(&l2, 0.0, 0.25).is_err());
        assert!(eval_h(&l2, -1.0, 0.25).is_err());
    }

    #[test]
    fn classification_examples() {
        let c = classify_h(&PenaltyModel::classic(), 0.7).unwrap();
        assert!(c.has_interior_root);
        assert_eq!(c.pi_star, 0.5);
        let ce = PenaltyModel::cross_entropy();
        let c = classify_h(&ce, 0.3).unwrap();
        assert!(!c.has_interior_root);
        assert_eq!(c.pi_star, 0.5);
        assert_eq!(c.pi_0, None);
        let c = classify_h(&ce, 0.2).unwrap();
        assert!(c.has_interior_root);
        assert!(c.pi_star < 0.5);
        let pi_0 = c.pi_0.unwrap();
        assert!(pi_0 < c.pi_star);
        // Inflection: g''(π*) + K/(π*(1-π*))² = 0, i.e. π*(1-π*) = K for CE.
        assert_abs_diff_eq!(c.pi_star * (1.0 - c.pi_star), 0.2, epsilon = 1e-10);
    }

    #[test]
    fn boundary_examples() {
        let classic = PenaltyModel::classic();
        let a = solve_boundary(&classic, 1.5).unwrap();
        assert_abs_diff_eq!(a, 0.4585, epsilon = 5e-4);
        assert_abs_diff_eq!(a, classic_oracle(1.5), epsilon = 1e-11);
        assert_eq!(solve_boundary(&PenaltyModel::cross_entropy(), 0.3).unwrap(), 0.5);
        let big = solve_boundary(&classic, 1e6).unwrap();
        assert!(big < 0.5 && 0.5 - big < 1e-6);
    }

    #[test]
    fn classic_boundary_matches_oracle_over_wide_range() {
        let classic = PenaltyModel::classic();
        for &k in &[1e-6, 1e-3, 0.05, 0.5, 2.0, 10.0, 1e3] {
            let a = solve_boundary(&classic, k).unwrap();
            assert_abs_diff_eq!(a, classic_oracle(k), epsilon = 1e-11);
        }
    }

    #[test]
    fn classic_boundary_is_monotone_in_k() {
        let classic = PenaltyModel::classic();
        let mut prev = 0.0;
        for i in 1..=20 {
            let a = solve_boundary(&classic, 0.1 * i as f64).unwrap();
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn boundary_minimises_h() {
        let cases = [
            (PenaltyModel::classic(), 1.5),
            (PenaltyModel::classic(), 0.05),
            (PenaltyModel::cross_entropy(), 0.15),
            (PenaltyModel::l2(), 0.05),
        ];
        for (penalty, k) in cases {
            let a = solve_boundary(&penalty, k).unwrap();
            assert!(a < 0.5, "{:?} K={k}", penalty.kind());
            let h_a = eval_h(&penalty, k, a).unwrap();
            for i in 1..10_000 {
                let pi = i as f64 / 10_000.0;
                assert!(h_a <= eval_h(&penalty, k, pi).unwrap() + 1e-10);
            }
            // Convex below the boundary.
            let c = classify_h(&penalty, k).unwrap();
            assert!(a < c.pi_star);
            for i in 1..=100 {
                let pi = a * i as f64 / 101.0;
                assert!(h2_unchecked(&penalty, k, pi) > 0.0);
            }
        }
    }

    #[test]
    fn root_near_one_half_is_found() {
        // CE: interior root iff K < 1/4; just below the threshold the root
        // sits very close to 1/2.
        let ce = PenaltyModel::cross_entropy();
        let a = solve_boundary(&ce, 0.25 - 1e-6).unwrap();
        assert!(a < 0.5);
        let f = |pi: f64| ce.g1_unchecked(pi) - (0.25 - 1e-6) * psi1_unchecked(pi);
        assert!(f(a - 1e-9) < 0.0);
    }

    proptest! {
        #[test]
        fn psi_and_h_are_symmetric(pi in 1e-6f64..(1.0 - 1e-6), k in 0.01f64..10.0) {
            prop_assert!((psi(pi).unwrap() - psi(1.0 - pi).unwrap()).abs() <= 1e-12);
            prop_assert!(psi(pi).unwrap() <= 0.0);
            for p in [PenaltyModel::classic(), PenaltyModel::cross_entropy(), PenaltyModel::l2()] {
                let d = eval_h(&p, k, pi).unwrap() - eval_h(&p, k, 1.0 - pi).unwrap();
                prop_assert!(d.abs() <= 1e-12 * (1.0 + k * psi(pi).unwrap().abs()));
            }
        }
    }
}
