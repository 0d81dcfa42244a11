//! Terminal penalties `g(π) = min_d f(π, d)` and the decision selector.
//!
//! `f(π, d) = L(1, d) π + L(0, d) (1 - π)` is the posterior expected loss of
//! announcing `d` when the posterior probability of `θ = 1` is `π`. Every
//! built-in penalty is symmetric about 1/2, concave and vanishes at 0 and 1.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_open_unit, Error, Result};
use crate::math::{log, log1p};

/// A real function supplied by the caller.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// `min(π, 1-π)`: 0-1 loss with hard decisions.
    Classic,
    /// `-π ln π - (1-π) ln(1-π)`: cross-entropy loss with soft decisions.
    CrossEntropy,
    /// `π(1-π)`: squared loss with soft decisions.
    L2,
    /// Caller-supplied `g`, `g'`, `g''` and selector.
    CustomSmooth,
}

/// Admissible decisions: a finite list or the whole unit interval.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSet {
    Finite(Vec<f64>),
    UnitInterval,
}

#[derive(Clone)]
struct CustomPenalty {
    g: RealFn,
    g1: RealFn,
    g2: RealFn,
    selector: RealFn,
}

/// Points used to check that `Lg(π) = π²(1-π)² g''(π)` is strictly
/// decreasing on `(0, 1/2)` and increasing on `(1/2, 1)`.
pub const LG_CHECK_POINTS: usize = 1024;

#[derive(Clone)]
pub struct PenaltyModel {
    kind: PenaltyKind,
    custom: Option<CustomPenalty>,
    decision_set: DecisionSet,
    lg_monotone: bool,
}

impl fmt::Debug for PenaltyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PenaltyModel")
            .field("kind", &self.kind)
            .field("decision_set", &self.decision_set)
            .field("lg_monotone", &self.lg_monotone)
            .finish()
    }
}

impl PenaltyModel {
    pub fn classic() -> Self {
        Self::builtin(PenaltyKind::Classic, DecisionSet::Finite(alloc::vec![0.0, 1.0]))
    }

    pub fn cross_entropy() -> Self {
        Self::builtin(PenaltyKind::CrossEntropy, DecisionSet::UnitInterval)
    }

    pub fn l2() -> Self {
        Self::builtin(PenaltyKind::L2, DecisionSet::UnitInterval)
    }

    fn builtin(kind: PenaltyKind, decision_set: DecisionSet) -> Self {
        Self {
            kind,
            custom: None,
            decision_set,
            lg_monotone: true,
        }
    }

    /// A smooth penalty given by its first two derivatives.
    ///
    /// The monotonicity of `Lg` is checked on a grid; a violation is recorded
    /// in [`PenaltyModel::lg_monotone`] rather than rejected, since the
    /// boundary solver still returns the leftmost root in that case.
    pub fn custom(g: RealFn, g1: RealFn, g2: RealFn, decision_set: DecisionSet, selector: RealFn) -> Self {
        let mut model = Self {
            kind: PenaltyKind::CustomSmooth,
            custom: Some(CustomPenalty { g, g1, g2, selector }),
            decision_set,
            lg_monotone: true,
        };
        model.lg_monotone = model.check_lg_monotone();
        model
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn decision_set(&self) -> &DecisionSet {
        &self.decision_set
    }

    /// Whether `Lg` passed the grid monotonicity check (always true for the
    /// built-in penalties).
    pub fn lg_monotone(&self) -> bool {
        self.lg_monotone
    }

    pub fn is_classic(&self) -> bool {
        self.kind == PenaltyKind::Classic
    }

    pub fn g(&self, pi: f64) -> Result<f64> {
        check_open_unit("pi", pi)?;
        Ok(self.g_unchecked(pi))
    }

    pub fn g1(&self, pi: f64) -> Result<f64> {
        check_open_unit("pi", pi)?;
        if self.is_classic() && pi == 0.5 {
            return Err(Error::Kink { pi });
        }
        Ok(self.g1_unchecked(pi))
    }

    pub fn g2(&self, pi: f64) -> Result<f64> {
        check_open_unit("pi", pi)?;
        if self.is_classic() && pi == 0.5 {
            return Err(Error::Kink { pi });
        }
        Ok(self.g2_unchecked(pi))
    }

    /// `(Lg)(π) = π²(1-π)² g''(π)`.
    pub fn lg(&self, pi: f64) -> Result<f64> {
        let g2 = self.g2(pi)?;
        let s = pi * (1.0 - pi);
        Ok(s * s * g2)
    }

    /// An optimal decision `h(π)`; the classic penalty breaks the tie at
    /// `π = 1/2` in favour of `d = 1`.
    pub fn selector(&self, pi: f64) -> Result<f64> {
        check_open_unit("pi", pi)?;
        Ok(match self.kind {
            PenaltyKind::Classic => {
                if pi >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            PenaltyKind::CrossEntropy | PenaltyKind::L2 => pi,
            PenaltyKind::CustomSmooth => (self.custom_fns().selector)(pi),
        })
    }

    /// Posterior expected loss `f(π, d)` of the underlying classification
    /// loss. Not available for custom penalties, which are specified through
    /// `g` directly.
    pub fn decision_loss(&self, pi: f64, d: f64) -> Option<f64> {
        match self.kind {
            PenaltyKind::Classic => {
                let l1 = if d == 1.0 { 0.0 } else { 1.0 };
                let l0 = if d == 0.0 { 0.0 } else { 1.0 };
                Some(l1 * pi + l0 * (1.0 - pi))
            }
            PenaltyKind::L2 => Some((d - 1.0) * (d - 1.0) * pi + d * d * (1.0 - pi)),
            PenaltyKind::CrossEntropy => {
                let l1 = if d > 0.0 { -log(d) } else { f64::INFINITY };
                let l0 = if d < 1.0 { -log1p(-d) } else { f64::INFINITY };
                Some(xlogy_guard(pi, l1) + xlogy_guard(1.0 - pi, l0))
            }
            PenaltyKind::CustomSmooth => None,
        }
    }

    pub(crate) fn g_unchecked(&self, pi: f64) -> f64 {
        match self.kind {
            PenaltyKind::Classic => pi.min(1.0 - pi),
            PenaltyKind::CrossEntropy => -(pi * log(pi)) - (1.0 - pi) * log1p(-pi),
            PenaltyKind::L2 => pi * (1.0 - pi),
            PenaltyKind::CustomSmooth => (self.custom_fns().g)(pi),
        }
    }

    /// `g'`, taking the left derivative at the classic kink.
    pub(crate) fn g1_unchecked(&self, pi: f64) -> f64 {
        match self.kind {
            PenaltyKind::Classic => {
                if pi <= 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            PenaltyKind::CrossEntropy => log1p(-pi) - log(pi),
            PenaltyKind::L2 => 1.0 - 2.0 * pi,
            PenaltyKind::CustomSmooth => (self.custom_fns().g1)(pi),
        }
    }

    /// `g''`, zero on both sides of the classic kink.
    pub(crate) fn g2_unchecked(&self, pi: f64) -> f64 {
        match self.kind {
            PenaltyKind::Classic => 0.0,
            PenaltyKind::CrossEntropy => -1.0 / (pi * (1.0 - pi)),
            PenaltyKind::L2 => -2.0,
            PenaltyKind::CustomSmooth => (self.custom_fns().g2)(pi),
        }
    }

    fn custom_fns(&self) -> &CustomPenalty {
        self.custom.as_ref().expect("custom penalty without functions")
    }

    fn check_lg_monotone(&self) -> bool {
        let lg = |pi: f64| {
            let s = pi * (1.0 - pi);
            s * s * self.g2_unchecked(pi)
        };
        let n = LG_CHECK_POINTS;
        let mut prev = lg(0.5 / (n as f64 + 1.0));
        for i in 2..=n {
            let pi = 0.5 * i as f64 / (n as f64 + 1.0);
            let cur = lg(pi);
            let mirrored = lg(1.0 - pi);
            if !(cur < prev) || (mirrored - cur).abs() > 1e-9 * (1.0 + cur.abs()) {
                return false;
            }
            prev = cur;
        }
        true
    }
}

// `x * l` with the convention `0 * ∞ = 0`.
fn xlogy_guard(x: f64, l: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * l
    }
}
