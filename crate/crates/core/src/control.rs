//! Control sets, running costs and the infimum of the cost-efficiency ratio
//! `η(u) = (φ(u) + c)/u²`.
//!
//! Control sets are finite unions of points and intervals that avoid 0. The
//! whole solution depends on the control set only through
//! `M = inf η`, which [`minimize_eta`] computes together with a minimiser or
//! a minimising sequence.
//!
//! Quadratic running costs `φ(u) = au² + bu` are minimised exactly: with
//! `v = 1/u` the ratio is the convex parabola `a + bv + cv²`. Other costs are
//! minimised on a grid with golden-section refinement, which assumes `φ` is
//! piecewise continuous.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{fabs, golden_section, log};
use crate::penalty::RealFn;
use crate::ExtReal;

/// Default number of grid points per interval piece.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Number of terms used when probing open or infinite endpoints.
pub const PROBE_TERMS: u32 = 60;
/// `|M|` at or below this is classified as zero.
pub const ZERO_TOL: f64 = 1e-12;

const REFINE_TOL: f64 = 1e-10;
const NEG_INF_THRESHOLD: f64 = -1e10;

/// One piece of a control set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Point(f64),
    /// Infinite endpoints must be open.
    Interval {
        lo: f64,
        hi: f64,
        lo_closed: bool,
        hi_closed: bool,
    },
}

impl Piece {
    pub fn contains(&self, u: f64) -> bool {
        match *self {
            Self::Point(p) => u == p,
            Self::Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                let above = if lo_closed { u >= lo } else { u > lo };
                let below = if hi_closed { u <= hi } else { u < hi };
                above && below
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Point(p) => {
                if !p.is_finite() || p == 0.0 {
                    return Err(Error::InvalidControlSet(format!("point {p} is not a nonzero real")));
                }
            }
            Self::Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(Error::InvalidControlSet(format!("empty interval ({lo}, {hi})")));
                }
                if (lo.is_infinite() && lo_closed) || (hi.is_infinite() && hi_closed) {
                    return Err(Error::InvalidControlSet(format!("infinite endpoint of ({lo}, {hi}) must be open")));
                }
                if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                    return Err(Error::InvalidControlSet(format!("empty interval ({lo}, {hi})")));
                }
                if self.contains(0.0) {
                    return Err(Error::InvalidControlSet(format!("interval ({lo}, {hi}) contains 0")));
                }
            }
        }
        Ok(())
    }

    fn intersects(&self, other: &Piece) -> bool {
        match (*self, *other) {
            (Self::Point(p), _) => other.contains(p),
            (_, Self::Point(q)) => self.contains(q),
            (
                Self::Interval {
                    lo: a_lo,
                    hi: a_hi,
                    lo_closed: a_lc,
                    hi_closed: a_hc,
                },
                Self::Interval {
                    lo: b_lo,
                    hi: b_hi,
                    lo_closed: b_lc,
                    hi_closed: b_hc,
                },
            ) => {
                let (lo, lo_closed) = if a_lo > b_lo {
                    (a_lo, a_lc)
                } else if b_lo > a_lo {
                    (b_lo, b_lc)
                } else {
                    (a_lo, a_lc && b_lc)
                };
                let (hi, hi_closed) = if a_hi < b_hi {
                    (a_hi, a_hc)
                } else if b_hi < a_hi {
                    (b_hi, b_hc)
                } else {
                    (a_hi, a_hc && b_hc)
                };
                lo < hi || (lo == hi && lo_closed && hi_closed)
            }
        }
    }
}

/// A non-empty finite union of pairwise disjoint pieces not containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    pieces: Vec<Piece>,
}

impl ControlSet {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidControlSet("no pieces".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            p.validate()?;
            for q in &pieces[..i] {
                if p.intersects(q) {
                    return Err(Error::InvalidControlSet(format!("pieces {q:?} and {p:?} overlap")));
                }
            }
        }
        Ok(Self { pieces })
    }

    /// `ℝ ∖ {0}`.
    pub fn nonzero_reals() -> Self {
        Self {
            pieces: alloc::vec![
                Piece::Interval {
                    lo: f64::NEG_INFINITY,
                    hi: 0.0,
                    lo_closed: false,
                    hi_closed: false,
                },
                Piece::Interval {
                    lo: 0.0,
                    hi: f64::INFINITY,
                    lo_closed: false,
                    hi_closed: false,
                },
            ],
        }
    }

    /// `(0, ∞)`.
    pub fn positive() -> Self {
        Self {
            pieces: alloc::vec![Piece::Interval {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_closed: false,
                hi_closed: false,
            }],
        }
    }

    pub fn points(points: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|&p| Piece::Point(p)).collect())
    }

    pub fn interval(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        Self::new(alloc::vec![Piece::Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn contains(&self, u: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(u))
    }

    pub fn is_bounded(&self) -> bool {
        self.pieces.iter().all(|p| match *p {
            Piece::Point(_) => true,
            Piece::Interval { lo, hi, .. } => lo.is_finite() && hi.is_finite(),
        })
    }

    /// The image of the set under `u ↦ factor·u` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain { what: "scale factor", value: factor });
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| match *p {
                Piece::Point(u) => Piece::Point(factor * u),
                Piece::Interval {
                    lo,
                    hi,
                    lo_closed,
                    hi_closed,
                } => Piece::Interval {
                    lo: factor * lo,
                    hi: factor * hi,
                    lo_closed,
                    hi_closed,
                },
            })
            .collect();
        Self::new(pieces)
    }
}

/// Control-dependent running cost `φ`.
#[derive(Clone)]
pub enum Phi {
    /// `a·u² + b·u`.
    Quadratic { a: f64, b: f64 },
    /// `coef·|u|^exponent`.
    Power { coef: f64, exponent: f64 },
    /// Values at isolated controls; only usable with point control sets.
    Table(Vec<(f64, f64)>),
    Custom(RealFn),
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { a, b } => write!(f, "Quadratic {{ a: {a}, b: {b} }}"),
            Self::Power { coef, exponent } => write!(f, "Power {{ coef: {coef}, exponent: {exponent} }}"),
            Self::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Running cost `φ(u) + c` per unit time.
#[derive(Debug, Clone)]
pub struct CostModel {
    phi: Phi,
    c: f64,
}

impl CostModel {
    pub fn new(phi: Phi, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidCost(format!("temporal cost c = {c} must be positive")));
        }
        match &phi {
            Phi::Quadratic { a, b } if !(a.is_finite() && b.is_finite()) => {
                return Err(Error::InvalidCost("quadratic coefficients must be finite".into()));
            }
            Phi::Power { coef, exponent } if !(coef.is_finite() && exponent.is_finite()) => {
                return Err(Error::InvalidCost("power coefficients must be finite".into()));
            }
            Phi::Table(t) => {
                if t.is_empty() {
                    return Err(Error::InvalidCost("empty table".into()));
                }
                for (i, &(u, v)) in t.iter().enumerate() {
                    if !u.is_finite() || u == 0.0 || !v.is_finite() {
                        return Err(Error::InvalidCost(format!("bad table entry ({u}, {v})")));
                    }
                    if t[..i].iter().any(|&(w, _)| w == u) {
                        return Err(Error::InvalidCost(format!("duplicate table entry for u = {u}")));
                    }
                }
            }
            _ => {}
        }
        Ok(Self { phi, c })
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Phi::Quadratic { a, b }, c)
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval_phi(&self, u: f64) -> Result<f64> {
        match &self.phi {
            Phi::Quadratic { a, b } => Ok(a * u * u + b * u),
            Phi::Power { coef, exponent } => Ok(coef * libm::pow(fabs(u), *exponent)),
            Phi::Table(t) => t
                .iter()
                .find(|&&(w, _)| w == u)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::InvalidCost(format!("no table entry for u = {u}"))),
            Phi::Custom(f) => {
                let v = f(u);
                if v.is_nan() {
                    Err(Error::InvalidCost(format!("phi({u}) is NaN")))
                } else {
                    Ok(v)
                }
            }
        }
    }

    /// Cost model seen in units where the drift-to-noise ratio is 1: with
    /// `ũ = ratio·u` the transformed cost is `φ̃(ũ) = φ(ũ/ratio)`.
    pub fn rescaled(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::Domain { what: "ratio", value: ratio });
        }
        let phi = match &self.phi {
            Phi::Quadratic { a, b } => Phi::Quadratic {
                a: a / (ratio * ratio),
                b: b / ratio,
            },
            Phi::Power { coef, exponent } => Phi::Power {
                coef: coef / libm::pow(ratio, *exponent),
                exponent: *exponent,
            },
            Phi::Table(t) => Phi::Table(t.iter().map(|&(u, v)| (ratio * u, v)).collect()),
            Phi::Custom(f) => {
                let f = Arc::clone(f);
                Phi::Custom(Arc::new(move |u| f(u / ratio)))
            }
        };
        Self::new(phi, self.c)
    }
}

/// `η(u) = (φ(u) + c)/u²`.
pub fn eta(cost: &CostModel, u: f64) -> Result<f64> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::Domain { what: "u", value: u });
    }
    Ok((cost.eval_phi(u)? + cost.c) / (u * u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaRegime {
    Positive,
    Zero,
    Negative,
}

impl EtaRegime {
    pub fn of(m: ExtReal) -> Self {
        match m {
            ExtReal::NegInfinity => Self::Negative,
            ExtReal::Finite(x) if fabs(x) <= ZERO_TOL => Self::Zero,
            ExtReal::Finite(x) if x > 0.0 => Self::Positive,
            ExtReal::Finite(_) => Self::Negative,
        }
    }
}

/// Controls `u_n ∈ 𝒰`, `n ≥ 1`, along which `η(u_n) → M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinimizingSequence {
    Constant(f64),
    /// `u_n = limit + step·2⁻ⁿ`, approaching an excluded endpoint, moved
    /// one ulp inside when the offset rounds away.
    Endpoint { limit: f64, step: f64 },
    /// `u_n = scale·2ⁿ`.
    Infinity { scale: f64 },
}

impl MinimizingSequence {
    pub fn term(&self, n: u32) -> f64 {
        match *self {
            Self::Constant(u) => u,
            Self::Endpoint { limit, step } => {
                let u = limit + step * libm::ldexp(1.0, -(n as i32));
                if u == limit {
                    // Clip into the set once the offset is below one ulp.
                    if step > 0.0 {
                        limit.next_up()
                    } else {
                        limit.next_down()
                    }
                } else {
                    u
                }
            }
            Self::Infinity { scale } => scale * libm::ldexp(1.0, n as i32),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::Infinity { .. })
    }
}

/// Infimum of `η` over a control set.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSolution {
    pub m: ExtReal,
    pub attained: bool,
    pub u_star: Option<f64>,
    /// A control with `η < 0` when `M = -∞`, otherwise the best control
    /// evaluated.
    pub witness: Option<f64>,
    pub sequence: MinimizingSequence,
    pub regime: EtaRegime,
}

#[derive(Debug, Clone, Copy)]
enum Candidate {
    Attained { value: f64, u: f64 },
    Limit { value: f64, sequence: MinimizingSequence, witness: f64 },
    Unbounded { witness: f64, sequence: MinimizingSequence },
}

impl Candidate {
    fn value(&self) -> f64 {
        match *self {
            Self::Attained { value, .. } | Self::Limit { value, .. } => value,
            Self::Unbounded { .. } => f64::NEG_INFINITY,
        }
    }

    fn sign(&self) -> f64 {
        match *self {
            Self::Attained { u, .. } => u,
            Self::Limit { sequence, .. } | Self::Unbounded { sequence, .. } => sequence.term(1),
        }
    }

    fn beats(&self, other: &Candidate) -> bool {
        let (a, b) = (self.value(), other.value());
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            return a == f64::NEG_INFINITY && b != f64::NEG_INFINITY;
        }
        let tol = 1e-13 * fabs(b).max(1.0);
        if a < b - tol {
            return true;
        }
        if a > b + tol {
            return false;
        }
        let attained = |c: &Candidate| matches!(c, Self::Attained { .. });
        match (attained(self), attained(other)) {
            (true, false) => true,
            (false, true) => false,
            _ => self.sign() > 0.0 && other.sign() < 0.0,
        }
    }
}

/// Computes `M = inf η` over `uset`, exactly for quadratic costs and
/// numerically with [`DEFAULT_GRID_POINTS`] otherwise.
pub fn minimize_eta(cost: &CostModel, uset: &ControlSet) -> Result<EtaSolution> {
    match cost.phi {
        Phi::Quadratic { a, b } => minimize_quadratic(a, b, cost.c, uset),
        _ => minimize_eta_numeric(cost, uset, DEFAULT_GRID_POINTS),
    }
}

/// Grid-and-refine minimisation of `η` with `grid_n` points per interval.
pub fn minimize_eta_numeric(cost: &CostModel, uset: &ControlSet, grid_n: usize) -> Result<EtaSolution> {
    if grid_n < 3 {
        return Err(Error::Domain {
            what: "grid_n",
            value: grid_n as f64,
        });
    }
    if matches!(cost.phi, Phi::Table(_)) && uset.pieces.iter().any(|p| !matches!(p, Piece::Point(_))) {
        return Err(Error::InvalidCost("tabulated costs require a point control set".into()));
    }
    let f = |u: f64| eta(cost, u);
    let mut best: Option<Candidate> = None;
    for piece in &uset.pieces {
        let cand = match *piece {
            Piece::Point(u) => Candidate::Attained { value: f(u)?, u },
            Piece::Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => numeric_interval(&f, lo, hi, lo_closed, hi_closed, grid_n)?,
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    Ok(finish(best.expect("control sets are non-empty")))
}

fn finish(best: Candidate) -> EtaSolution {
    let (m, attained, u_star, witness, sequence) = match best {
        Candidate::Attained { value, u } => (ExtReal::Finite(value), true, Some(u), Some(u), MinimizingSequence::Constant(u)),
        Candidate::Limit {
            value,
            sequence,
            witness,
        } => (ExtReal::Finite(value), false, None, Some(witness), sequence),
        Candidate::Unbounded { witness, sequence } => (ExtReal::NegInfinity, false, None, Some(witness), sequence),
    };
    EtaSolution {
        m,
        attained,
        u_star,
        witness,
        sequence,
        regime: EtaRegime::of(m),
    }
}

/// Sequence approaching the end of the magnitude range `(t_lo, t_hi)` of a
/// piece on the side with sign `s`.
fn approach(s: f64, t_lo: f64, t_hi: f64, upper: bool) -> MinimizingSequence {
    if upper {
        if t_hi.is_infinite() {
            MinimizingSequence::Infinity {
                scale: s * if t_lo > 0.0 { t_lo } else { 1.0 },
            }
        } else {
            let span = if t_lo.is_finite() { t_hi - t_lo } else { 1.0 };
            MinimizingSequence::Endpoint {
                limit: s * t_hi,
                step: -s * span,
            }
        }
    } else {
        let span = if t_hi.is_finite() { t_hi - t_lo } else { t_lo.max(1.0) };
        MinimizingSequence::Endpoint {
            limit: s * t_lo,
            step: s * span,
        }
    }
}

/// Magnitude range of an interval piece: `(sign, t_lo, t_hi, t_lo_closed,
/// t_hi_closed)` with `0 ≤ t_lo < t_hi ≤ ∞`.
fn magnitudes(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> (f64, f64, f64, bool, bool) {
    if lo >= 0.0 {
        (1.0, lo, hi, lo_closed, hi_closed)
    } else {
        (-1.0, 0.0 - hi, 0.0 - lo, hi_closed, lo_closed)
    }
}

fn minimize_quadratic(a: f64, b: f64, c: f64, uset: &ControlSet) -> Result<EtaSolution> {
    // η = a + b·v + c·v² with v = 1/u.
    let q = |v: f64| a + b * v + c * v * v;
    let v_star = -b / (2.0 * c);
    let mut best: Option<Candidate> = None;
    for piece in &uset.pieces {
        let cand = match *piece {
            Piece::Point(u) => Candidate::Attained { value: q(1.0 / u), u },
            Piece::Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                let (s, t_lo, t_hi, t_lo_closed, t_hi_closed) = magnitudes(lo, hi, lo_closed, hi_closed);
                // In w = |v| = 1/t the piece is (1/t_hi, 1/t_lo).
                let w_star = s * v_star;
                let w_lo = 1.0 / t_hi;
                let w_hi = 1.0 / t_lo;
                if w_star > w_lo && w_star < w_hi {
                    let u = s / w_star;
                    Candidate::Attained {
                        value: q(1.0 / u),
                        u,
                    }
                } else if w_star <= w_lo {
                    if t_hi_closed {
                        Candidate::Attained {
                            value: q(s * w_lo),
                            u: s * t_hi,
                        }
                    } else {
                        let sequence = approach(s, t_lo, t_hi, true);
                        Candidate::Limit {
                            value: q(s * w_lo),
                            sequence,
                            witness: sequence.term(1),
                        }
                    }
                } else if t_lo_closed {
                    Candidate::Attained {
                        value: q(s * w_hi),
                        u: s * t_lo,
                    }
                } else {
                    // w → ∞ means u → 0, where η → +∞; only reachable with
                    // t_lo > 0.
                    let sequence = approach(s, t_lo, t_hi, false);
                    Candidate::Limit {
                        value: q(s * w_hi),
                        sequence,
                        witness: sequence.term(1),
                    }
                }
            }
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    Ok(finish(best.expect("control sets are non-empty")))
}

fn numeric_interval<F: Fn(f64) -> Result<f64>>(
    f: &F,
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
    grid_n: usize,
) -> Result<Candidate> {
    let (s, t_lo, t_hi, t_lo_closed, t_hi_closed) = magnitudes(lo, hi, lo_closed, hi_closed);
    let g = |t: f64| f(s * t);

    let a = if t_lo > 0.0 {
        t_lo
    } else if t_hi.is_finite() {
        t_hi * 1e-6
    } else {
        1e-6
    };
    let b = if t_hi.is_finite() { t_hi } else { a.max(1.0) * 1e6 };
    let geometric = t_lo == 0.0 || t_hi.is_infinite() || b / a > 100.0;
    let n = grid_n;
    let node = |i: usize| -> f64 {
        if i == 0 {
            a
        } else if i == n - 1 {
            b
        } else if geometric {
            libm::exp(log(a) + (log(b) - log(a)) * i as f64 / (n - 1) as f64)
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let admissible = |t: f64| {
        (if t_lo_closed { t >= t_lo } else { t > t_lo }) && (if t_hi_closed { t <= t_hi } else { t < t_hi })
    };

    let mut best_i = None;
    let mut best_v = f64::INFINITY;
    for i in 0..n {
        let t = node(i);
        if !admissible(t) {
            continue;
        }
        let v = g(t)?;
        if v.is_nan() {
            return Err(Error::InvalidCost(format!("eta({}) is NaN", s * t)));
        }
        if v < best_v {
            best_v = v;
            best_i = Some(i);
        }
    }

    let mut best_t = f64::NAN;
    if let Some(i) = best_i {
        best_t = node(i);
        let left = if i == 0 { a } else { node(i - 1) };
        let right = if i == n - 1 { b } else { node(i + 1) };
        if right > left {
            let (t, v) = golden_section(|t| g(t).unwrap_or(f64::INFINITY), left, right, REFINE_TOL);
            if admissible(t) && v < best_v {
                best_t = t;
                best_v = v;
            }
        }
    }

    // Limits at open and infinite ends.
    let mut limits = Vec::new();
    if !t_lo_closed {
        limits.push(false);
    }
    if !t_hi_closed {
        limits.push(true);
    }
    let mut result = best_i.map(|_| Candidate::Attained {
        value: best_v,
        u: s * best_t,
    });
    for upper in limits {
        let seq = approach(s, t_lo, t_hi, upper);
        let mut last = f64::NAN;
        let mut decreasing = true;
        let mut witness = seq.term(1);
        for k in 1..=PROBE_TERMS {
            let u = seq.term(k);
            let v = f(u)?;
            if v.is_nan() {
                return Err(Error::InvalidCost(format!("eta({u}) is NaN")));
            }
            if v < 0.0 {
                witness = u;
            }
            if k > 1 && v > last {
                decreasing = false;
            }
            last = v;
        }
        let cand = if decreasing && last < NEG_INF_THRESHOLD {
            Candidate::Unbounded { witness, sequence: seq }
        } else {
            Candidate::Limit {
                value: last,
                sequence: seq,
                witness: seq.term(1),
            }
        };
        if result.as_ref().is_none_or(|r| cand.beats(r)) {
            result = Some(cand);
        }
    }
    result.ok_or_else(|| Error::InvalidCost("no admissible grid point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn preset() -> CostModel {
        CostModel::quadratic(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&preset(), -2.0).unwrap(), 0.75);
        let c = CostModel::quadratic(1.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(eta(&c, 10.0).unwrap(), 1.01, epsilon = 1e-15);
        assert_eq!(eta(&c, 3.7).unwrap(), eta(&c, -3.7).unwrap());
        assert!(matches!(eta(&c, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn control_set_validation() {
        assert!(ControlSet::points(&[0.0]).is_err());
        assert!(ControlSet::points(&[1.0, 1.0]).is_err());
        assert!(ControlSet::interval(-1.0, 1.0, false, false).is_err());
        assert!(ControlSet::interval(0.0, 1.0, true, true).is_err());
        assert!(ControlSet::interval(0.0, 1.0, false, true).is_ok());
        assert!(ControlSet::interval(1.0, f64::INFINITY, true, true).is_err());
        assert!(ControlSet::interval(2.0, 1.0, true, true).is_err());
        assert!(ControlSet::new(Vec::new()).is_err());
        let touching = ControlSet::new(alloc::vec![
            Piece::Interval { lo: 0.5, hi: 1.0, lo_closed: true, hi_closed: true },
            Piece::Interval { lo: 1.0, hi: 2.0, lo_closed: true, hi_closed: true },
        ]);
        assert!(touching.is_err());
        let adjacent = ControlSet::new(alloc::vec![
            Piece::Interval { lo: 0.5, hi: 1.0, lo_closed: true, hi_closed: false },
            Piece::Interval { lo: 1.0, hi: 2.0, lo_closed: true, hi_closed: true },
        ]);
        assert!(adjacent.is_ok());
        let point_inside = ControlSet::new(alloc::vec![
            Piece::Point(1.5),
            Piece::Interval { lo: 1.0, hi: 2.0, lo_closed: true, hi_closed: true },
        ]);
        assert!(point_inside.is_err());
    }

    #[test]
    fn quadratic_closed_form() {
        let sol = minimize_eta(&preset(), &ControlSet::nonzero_reals()).unwrap();
        assert_eq!(sol.m, ExtReal::Finite(0.75));
        assert!(sol.attained);
        assert_eq!(sol.u_star, Some(-2.0));
        assert_eq!(sol.regime, EtaRegime::Positive);
    }

    #[test]
    fn quadratic_without_linear_term_is_not_attained() {
        let cost = CostModel::quadratic(1.0, 0.0, 1.0).unwrap();
        let sol = minimize_eta(&cost, &ControlSet::nonzero_reals()).unwrap();
        assert_eq!(sol.m, ExtReal::Finite(1.0));
        assert!(!sol.attained);
        assert_eq!(sol.u_star, None);
        for n in 1..=10 {
            assert_eq!(sol.sequence.term(n), libm::ldexp(1.0, n as i32));
        }
        assert!(eta(&cost, sol.sequence.term(60)).unwrap() - 1.0 <= 1e-8);
    }

    #[test]
    fn table_on_points() {
        let cost = CostModel::new(Phi::Table(alloc::vec![(1.0, 0.0), (2.0, 1.0), (3.0, 5.0)]), 1.0).unwrap();
        let uset = ControlSet::points(&[1.0, 2.0, 3.0]).unwrap();
        let sol = minimize_eta(&cost, &uset).unwrap();
        // Exhaustive oracle.
        let oracle = [1.0, 2.0, 3.0]
            .iter()
            .map(|&u| (eta(&cost, u).unwrap(), u))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
        assert_eq!(sol.m, ExtReal::Finite(oracle.0));
        assert_eq!(sol.m, ExtReal::Finite(0.5));
        assert_eq!(sol.u_star, Some(2.0));
        assert!(sol.attained);
        assert!(minimize_eta(&cost, &ControlSet::positive()).is_err());
    }

    #[test]
    fn negative_quadratic_on_positive_half_line() {
        let cost = CostModel::quadratic(1.0, -4.0, 1.0).unwrap();
        let sol = minimize_eta(&cost, &ControlSet::positive()).unwrap();
        assert_eq!(sol.m, ExtReal::Finite(-3.0));
        assert_eq!(sol.u_star, Some(0.5));
        assert_eq!(sol.regime, EtaRegime::Negative);
        assert_eq!(eta(&cost, 0.5).unwrap(), -3.0);
    }

    #[test]
    fn quadratic_with_minimiser_outside_the_set() {
        // u* = -2 is excluded; on (0, 1] the minimum is at the closed end 1.
        let uset = ControlSet::interval(0.0, 1.0, false, true).unwrap();
        let sol = minimize_eta(&preset(), &uset).unwrap();
        assert!(sol.attained);
        assert_eq!(sol.u_star, Some(1.0));
        assert_eq!(sol.m, ExtReal::Finite(3.0));
        // On (0, ∞) the infimum a = 1 is approached at infinity.
        let sol = minimize_eta(&preset(), &ControlSet::positive()).unwrap();
        assert!(!sol.attained);
        assert_eq!(sol.m, ExtReal::Finite(1.0));
        assert!(!sol.sequence.is_bounded());
        // On [-3, -2) the infimum is approached at the open end -2.
        let uset = ControlSet::interval(-3.0, -1.0, true, false).unwrap();
        let sol = minimize_eta(&preset(), &uset).unwrap();
        assert!(sol.attained);
        let uset = ControlSet::interval(-2.0, -1.0, false, true).unwrap();
        let sol = minimize_eta(&preset(), &uset).unwrap();
        assert!(!sol.attained);
        assert!(sol.sequence.is_bounded());
        for n in 1..=60 {
            assert!(uset.contains(sol.sequence.term(n)));
        }
        assert!(eta(&preset(), sol.sequence.term(60)).unwrap() - 0.75 <= 1e-8);
    }

    #[test]
    fn numeric_agrees_with_closed_form() {
        for &(a, b, c) in &[(1.0, 1.0, 1.0), (0.5, -0.3, 2.0), (2.0, 3.0, 0.5), (0.1, 0.1, 0.1)] {
            let cost = CostModel::quadratic(a, b, c).unwrap();
            let exact = minimize_eta(&cost, &ControlSet::nonzero_reals()).unwrap();
            let num = minimize_eta_numeric(&cost, &ControlSet::nonzero_reals(), DEFAULT_GRID_POINTS).unwrap();
            assert_abs_diff_eq!(exact.u_star.unwrap(), -2.0 * c / b, epsilon = 1e-15);
            assert_abs_diff_eq!(exact.m.finite().unwrap(), (4.0 * a * c - b * b) / (4.0 * c), epsilon = 1e-15);
            assert!(num.attained);
            assert!((num.u_star.unwrap() - exact.u_star.unwrap()).abs() <= 1e-6);
            assert!((num.m.finite().unwrap() - exact.m.finite().unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn numeric_detects_infimum_at_infinity() {
        let cost = CostModel::new(Phi::Power { coef: 1.0, exponent: 2.0 }, 1.0).unwrap();
        let sol = minimize_eta(&cost, &ControlSet::nonzero_reals()).unwrap();
        assert!(!sol.attained);
        assert!((sol.m.finite().unwrap() - 1.0).abs() <= 1e-8);
        assert!(eta(&cost, sol.sequence.term(60)).unwrap() - 1.0 <= 1e-8);
    }

    #[test]
    fn numeric_detects_unbounded_below() {
        let cost = CostModel::new(Phi::Custom(Arc::new(|u: f64| -u * u * u.abs())), 1.0).unwrap();
        let sol = minimize_eta(&cost, &ControlSet::positive()).unwrap();
        assert_eq!(sol.m, ExtReal::NegInfinity);
        assert_eq!(sol.regime, EtaRegime::Negative);
        assert!(eta(&cost, sol.witness.unwrap()).unwrap() < 0.0);
    }

    #[test]
    fn power_cost_interior_minimum() {
        // η = u + 1/u² on u > 0 has its minimum at u = 2^(1/3).
        let cost = CostModel::new(Phi::Power { coef: 1.0, exponent: 3.0 }, 1.0).unwrap();
        let sol = minimize_eta(&cost, &ControlSet::positive()).unwrap();
        let u = libm::cbrt(2.0);
        assert!(sol.attained);
        assert!((sol.u_star.unwrap() - u).abs() <= 1e-6);
        assert!((sol.m.finite().unwrap() - (u + 1.0 / (u * u))).abs() <= 1e-10);
    }

    #[test]
    fn scaling_law() {
        let r = 2.0;
        let base = minimize_eta(&preset(), &ControlSet::nonzero_reals()).unwrap();
        let scaled_set = ControlSet::nonzero_reals().scaled(r).unwrap();
        let rescaled = preset().rescaled(r).unwrap();
        let sol = minimize_eta(&rescaled, &scaled_set).unwrap();
        // M of the unit-ratio problem equals inf (φ(u)+c)/(r·u)².
        assert_abs_diff_eq!(sol.m.finite().unwrap(), base.m.finite().unwrap() / (r * r), epsilon = 1e-15);
        assert_abs_diff_eq!(sol.u_star.unwrap(), r * base.u_star.unwrap(), epsilon = 1e-14);
        let num = minimize_eta_numeric(&rescaled, &scaled_set, DEFAULT_GRID_POINTS).unwrap();
        assert!((num.m.finite().unwrap() - sol.m.finite().unwrap()).abs() <= 1e-9);
        // The same holds for a non-quadratic cost.
        let cost = CostModel::new(Phi::Power { coef: 1.0, exponent: 3.0 }, 1.0).unwrap();
        let a = minimize_eta(&cost, &ControlSet::positive()).unwrap();
        let b = minimize_eta(&cost.rescaled(r).unwrap(), &ControlSet::positive().scaled(r).unwrap()).unwrap();
        assert!((b.m.finite().unwrap() - a.m.finite().unwrap() / (r * r)).abs() <= 1e-9);
        assert!((b.u_star.unwrap() - r * a.u_star.unwrap()).abs() <= 1e-5);
    }

    #[test]
    fn regime_tolerance() {
        assert_eq!(EtaRegime::of(ExtReal::Finite(1e-13)), EtaRegime::Zero);
        assert_eq!(EtaRegime::of(ExtReal::Finite(-1e-12)), EtaRegime::Zero);
        assert_eq!(EtaRegime::of(ExtReal::Finite(2e-12)), EtaRegime::Positive);
        assert_eq!(EtaRegime::of(ExtReal::NegInfinity), EtaRegime::Negative);
    }

    proptest! {
        #[test]
        fn m_is_a_lower_bound(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.01f64..3.0, us in proptest::collection::vec(1e-3f64..1e3, 100)) {
            let cost = CostModel::quadratic(a, b, c).unwrap();
            let sol = minimize_eta(&cost, &ControlSet::nonzero_reals()).unwrap();
            let m = sol.m.finite().unwrap();
            for (i, u) in us.iter().enumerate() {
                let u = if i % 2 == 0 { *u } else { -*u };
                prop_assert!(m <= eta(&cost, u).unwrap() + 1e-12 * (1.0 + m.abs()));
            }
            if sol.attained {
                prop_assert!((eta(&cost, sol.u_star.unwrap()).unwrap() - m).abs() <= 1e-10);
            } else {
                prop_assert!((eta(&cost, sol.sequence.term(60)).unwrap() - m).abs() <= 1e-8);
            }
        }

        #[test]
        fn numeric_m_is_a_lower_bound(coef in 0.1f64..2.0, p in 2.5f64..4.0, us in proptest::collection::vec(1e-2f64..1e2, 100)) {
            let cost = CostModel::new(Phi::Power { coef, exponent: p }, 1.0).unwrap();
            let uset = ControlSet::interval(0.01, 100.0, true, true).unwrap();
            let sol = minimize_eta(&cost, &uset).unwrap();
            let m = sol.m.finite().unwrap();
            for u in us {
                prop_assert!(m <= eta(&cost, u).unwrap() + 1e-12);
            }
        }
    }
}
