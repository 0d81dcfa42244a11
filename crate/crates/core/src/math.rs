//! Scalar helpers shared by the numerical modules.

use core::fmt;

use crate::error::{Error, Result};

pub(crate) use libm::{exp, fabs, log, log1p, sqrt};

/// A real number or `-∞`.
///
/// The value function of a problem with `M < 0` is identically `-∞`; keeping
/// that case out of `f64` avoids mixing it with overflow or NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    NegInfinity,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(x) => Some(x),
            Self::NegInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// Lossy conversion, mapping `NegInfinity` to `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(x) => x,
            Self::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            Self::NegInfinity
        } else {
            Self::Finite(x)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => fmt::Display::fmt(x, f),
            Self::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// `ln(π/(1-π))`.
pub fn logit(pi: f64) -> f64 {
    log(pi) - log1p(-pi)
}

/// Inverse of [`logit`], evaluated without overflow for large `|y|`.
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + exp(-y))
    } else {
        let e = exp(y);
        e / (1.0 + e)
    }
}

pub(crate) const MAX_BISECTION_ITERS: usize = 200;

/// Bisection on a bracket where `f(lo)` and `f(hi)` have opposite signs
/// (zero counts as either sign). Stops once the bracket is narrower than
/// `tol`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        iterations: MAX_BISECTION_ITERS,
    })
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, returning
/// `(argmin, min)`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 500 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iters += 1;
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Pairwise summation in a fixed order, so that sums over the same slice are
/// bitwise reproducible.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for x in xs {
            s += *x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    #[test]
    fn logit_sigmoid_inverse() {
        for &p in &[1e-12, 0.1, 0.5, 0.75, 1.0 - 1e-9] {
            assert!((sigmoid(logit(p)) - p).abs() <= 1e-15 * p.max(1e-3));
        }
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) == 0.0);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section(|x| (x - 0.3) * (x - 0.3) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn ext_real_display() {
        assert_eq!(std::format!("{}", ExtReal::NegInfinity), "-inf");
        assert_eq!(ExtReal::from_f64(f64::NEG_INFINITY), ExtReal::NegInfinity);
    }
}
