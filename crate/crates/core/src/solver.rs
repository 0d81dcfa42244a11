//! Three-regime value function, optimal and ε-optimal policies, and a
//! grid check of the variational inequalities.
//!
//! With `M = inf η`:
//!
//! - `M > 0`: the constant control `u*` (when attained) together with the
//!   first exit of the posterior from `(A*, 1-A*)` is optimal, where `A*` is
//!   the smallest root of `g' = 2MΨ'` in `(0, 1/2]`. The value is
//!   `V(π) = 2M(Ψ(π) - Ψ(A*)) + g(A*)` inside the interval and `g` outside.
//! - `M = 0`: `V ≡ 0`.
//! - `M < 0`: `V ≡ -∞`; never stopping with any `u` such that `η(u) < 0`
//!   drives the cost to `-∞`.

use alloc::vec::Vec;

use crate::control::{eta, minimize_eta, ControlSet, CostModel, EtaRegime, EtaSolution};
use crate::error::{Error, Result};
use crate::geometry::{psi1_unchecked, psi2_unchecked, psi_unchecked, solve_boundary};
use crate::math::{bisect, fabs, logit, sigmoid};
use crate::penalty::PenaltyModel;
use crate::ExtReal;

/// Largest index of ε-optimal recipes.
pub const EPSILON_TERMS: u32 = 60;
/// Default number of grid points for [`verify_vi`].
pub const DEFAULT_VI_GRID: usize = 4096;
/// Half-width of the neighbourhoods of `A*` and `1-A*` left out of the
/// variational-inequality check.
pub const VI_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PositiveM,
    ZeroM,
    NegativeM,
}

impl From<EtaRegime> for Regime {
    fn from(r: EtaRegime) -> Self {
        match r {
            EtaRegime::Positive => Self::PositiveM,
            EtaRegime::Zero => Self::ZeroM,
            EtaRegime::Negative => Self::NegativeM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    ConstantControlAndThreshold,
    EpsilonOptimalFamily,
    StopImmediately,
    NeverStop,
}

/// One member of an ε-optimal family: observe with the constant control `u`
/// until the posterior leaves `(delta, 1-delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonStep {
    pub index: u32,
    pub u: f64,
    pub delta: f64,
    /// Expected total cost of the pair from the prior it was built for.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDescription {
    pub kind: PolicyKind,
    pub u_star: Option<f64>,
    pub a_star: f64,
    /// For ε-optimal families, the pairs built for the prior 1/2.
    pub epsilon_recipe: Option<Vec<EpsilonStep>>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    regime: Regime,
    m: ExtReal,
    k: f64,
    a_star: f64,
    eta: EtaSolution,
    penalty: PenaltyModel,
    cost: CostModel,
    policy: PolicyDescription,
}

/// Solves the control problem for the given penalty, cost and control set.
pub fn solve(penalty: &PenaltyModel, cost: &CostModel, uset: &ControlSet) -> Result<Solution> {
    let eta = minimize_eta(cost, uset)?;
    Solution::from_eta(penalty, cost, eta)
}

impl Solution {
    /// Assembles the solution from an already computed infimum of `η`.
    pub fn from_eta(penalty: &PenaltyModel, cost: &CostModel, eta: EtaSolution) -> Result<Self> {
        let regime = Regime::from(eta.regime);
        let (k, a_star) = match (regime, eta.m) {
            (Regime::PositiveM, ExtReal::Finite(m)) => {
                let k = 2.0 * m;
                (k, solve_boundary(penalty, k)?)
            }
            _ => (0.0, 0.0),
        };
        let mut sol = Self {
            regime,
            m: eta.m,
            k,
            a_star,
            eta,
            penalty: penalty.clone(),
            cost: cost.clone(),
            policy: PolicyDescription {
                kind: PolicyKind::NeverStop,
                u_star: None,
                a_star,
                epsilon_recipe: None,
            },
        };
        sol.policy = sol.build_policy()?;
        Ok(sol)
    }

    /// The same solution with the stopping threshold moved to `a`. Useful
    /// for checking that only `A*` satisfies the variational inequalities.
    pub fn with_threshold(&self, a: f64) -> Result<Self> {
        if self.regime != Regime::PositiveM {
            return Err(Error::NotApplicable("threshold override needs M > 0"));
        }
        if !(a > 0.0 && a <= 0.5) {
            return Err(Error::Domain { what: "threshold", value: a });
        }
        let mut sol = self.clone();
        sol.a_star = a;
        sol.policy.a_star = a;
        Ok(sol)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn m(&self) -> ExtReal {
        self.m
    }

    /// `K = 2M` when `M > 0`, otherwise 0.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn a_star(&self) -> f64 {
        self.a_star
    }

    pub fn eta_solution(&self) -> &EtaSolution {
        &self.eta
    }

    pub fn penalty(&self) -> &PenaltyModel {
        &self.penalty
    }

    pub fn policy(&self) -> &PolicyDescription {
        &self.policy
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn u_star(&self) -> Option<f64> {
        self.eta.u_star
    }

    fn continues(&self, pi: f64) -> bool {
        pi > self.a_star && pi < 1.0 - self.a_star
    }

    fn g(&self, pi: f64) -> f64 {
        if pi <= 0.0 || pi >= 1.0 {
            0.0
        } else {
            self.penalty.g_unchecked(pi)
        }
    }

    /// `V(π)` for `π ∈ [0, 1]`.
    pub fn value(&self, pi: f64) -> Result<ExtReal> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::Domain { what: "pi", value: pi });
        }
        Ok(match self.regime {
            Regime::NegativeM => ExtReal::NegInfinity,
            Regime::ZeroM => ExtReal::Finite(0.0),
            Regime::PositiveM => ExtReal::Finite(if self.continues(pi) {
                self.k * (psi_unchecked(pi) - psi_unchecked(self.a_star)) + self.g(self.a_star)
            } else {
                self.g(pi)
            }),
        })
    }

    /// `V'(π)` on `(0, 1)`, from the continuation formula on the closed
    /// interval `[A*, 1-A*]` and from `g` outside it.
    pub fn value_d1(&self, pi: f64) -> Result<f64> {
        self.value_derivative(pi, psi1_unchecked, |p| self.penalty.g1_unchecked(p))
    }

    /// `V''(π)` on `(0, 1)`, one-sided at `A*` and `1-A*` as for
    /// [`Self::value_d1`].
    pub fn value_d2(&self, pi: f64) -> Result<f64> {
        self.value_derivative(pi, psi2_unchecked, |p| self.penalty.g2_unchecked(p))
    }

    fn value_derivative(&self, pi: f64, psi_d: fn(f64) -> f64, g_d: impl Fn(f64) -> f64) -> Result<f64> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Domain { what: "pi", value: pi });
        }
        match self.regime {
            Regime::NegativeM => Err(Error::NotApplicable("value is -inf")),
            Regime::ZeroM => Ok(0.0),
            Regime::PositiveM => {
                if pi >= self.a_star && pi <= 1.0 - self.a_star && self.a_star < 0.5 {
                    Ok(self.k * psi_d(pi))
                } else {
                    Ok(g_d(pi))
                }
            }
        }
    }

    /// `|2MΨ'(A*) - g'(A*)|`, zero when the continuation region is empty.
    pub fn smooth_fit_residual(&self) -> f64 {
        if self.regime != Regime::PositiveM || self.a_star >= 0.5 {
            return 0.0;
        }
        fabs(self.k * psi1_unchecked(self.a_star) - self.penalty.g1_unchecked(self.a_star))
    }

    fn build_policy(&self) -> Result<PolicyDescription> {
        let a_star = self.a_star;
        let u_star = self.eta.u_star;
        let (kind, recipe) = match self.regime {
            Regime::PositiveM if a_star >= 0.5 => (PolicyKind::StopImmediately, None),
            Regime::PositiveM if self.eta.attained => (PolicyKind::ConstantControlAndThreshold, None),
            Regime::PositiveM => (PolicyKind::EpsilonOptimalFamily, Some(self.epsilon_recipe(0.5, EPSILON_TERMS)?)),
            Regime::ZeroM if self.eta.attained => (PolicyKind::NeverStop, None),
            Regime::ZeroM => (PolicyKind::EpsilonOptimalFamily, Some(self.epsilon_recipe(0.5, EPSILON_TERMS)?)),
            Regime::NegativeM => (PolicyKind::NeverStop, None),
        };
        let u_star = match self.regime {
            Regime::NegativeM => u_star.or(self.eta.witness),
            _ => u_star,
        };
        Ok(PolicyDescription {
            kind,
            u_star,
            a_star,
            epsilon_recipe: recipe,
        })
    }

    /// ε-optimal pairs `(u_n, δ_n)`, `n = 1..=n_max`, for the prior `pi`.
    ///
    /// With `M > 0` the thresholds decrease to `A*` and the controls follow
    /// the minimising sequence of `η`. With `M = 0` the threshold `δ_k`
    /// solves `Ψ(π) - Ψ(δ_k) = k` and `u` is the first term of the
    /// minimising sequence with `η ≤ k⁻²`; the cost `g(δ_k) + 2kη(u)` then
    /// tends to 0.
    pub fn epsilon_recipe(&self, pi: f64, n_max: u32) -> Result<Vec<EpsilonStep>> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::Domain { what: "pi", value: pi });
        }
        let eta_at = |u: f64| -> f64 { self.eta_at(u) };
        let seq = self.eta.sequence;
        let mut out = Vec::with_capacity(n_max as usize);
        match self.regime {
            Regime::NegativeM => return Err(Error::NotApplicable("no epsilon-optimal family when M < 0")),
            Regime::PositiveM => {
                let a = self.a_star;
                for n in 1..=n_max {
                    let delta = a + (0.5 - a) * libm::ldexp(1.0, -(n as i32));
                    let u = seq.term(n);
                    let cost = if pi > delta && pi < 1.0 - delta {
                        self.g(delta) + 2.0 * eta_at(u) * (psi_unchecked(pi) - psi_unchecked(delta))
                    } else {
                        self.g(pi)
                    };
                    out.push(EpsilonStep { index: n, u, delta, cost });
                }
            }
            Regime::ZeroM => {
                for k in 1..=n_max {
                    let kf = k as f64;
                    let delta = zero_regime_threshold(pi, kf)?;
                    let target = 1.0 / (kf * kf);
                    let mut u = seq.term(EPSILON_TERMS);
                    for n in 1..=EPSILON_TERMS {
                        if eta_at(seq.term(n)) <= target {
                            u = seq.term(n);
                            break;
                        }
                    }
                    let cost = self.g(delta) + 2.0 * kf * eta_at(u);
                    out.push(EpsilonStep {
                        index: k,
                        u,
                        delta,
                        cost,
                    });
                }
            }
        }
        Ok(out)
    }

    fn eta_at(&self, u: f64) -> f64 {
        // The sequence only produces controls at which η was evaluable.
        eta(&self.cost, u).unwrap_or(f64::NAN)
    }

    /// Linear stopping boundaries for the raw observation `X` started from
    /// the prior `p`.
    pub fn x_space_boundaries(&self, p: f64) -> Result<XBoundaries> {
        if self.regime != Regime::PositiveM || !self.eta.attained {
            return Err(Error::NotApplicable("linear boundaries need M > 0 attained"));
        }
        XBoundaries::new(self.a_star, p, self.eta.u_star.expect("attained"))
    }
}

/// `δ ∈ (0, min(π, 1-π))` with `Ψ(π) - Ψ(δ) = k`, or 1/2 if there is none.
fn zero_regime_threshold(pi: f64, k: f64) -> Result<f64> {
    let target = psi_unchecked(pi) - k;
    let edge = pi.min(1.0 - pi);
    // Ψ is increasing on (0, 1/2]; solve in logit coordinates for accuracy
    // at tiny δ.
    let f = |y: f64| psi_unchecked(sigmoid(y)) - target;
    let hi = logit(edge);
    let lo = -745.0;
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Ok(0.5);
    }
    let y = bisect(f, lo, hi, 1e-12)?;
    Ok(sigmoid(y))
}

/// Straight-line stopping boundaries `u t/2 + Γ/u` for the observation
/// process started from prior `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XBoundaries {
    pub p: f64,
    pub u_star: f64,
    /// `ln((1-A)(1-p)/(A p))`: the posterior reaches `1-A` when
    /// `u X - u²t/2` equals this.
    pub gamma_upper: f64,
    /// `ln(A(1-p)/((1-A) p))`.
    pub gamma_lower: f64,
}

impl XBoundaries {
    pub fn new(a: f64, p: f64, u: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 0.5) {
            return Err(Error::Domain { what: "A", value: a });
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain { what: "p", value: p });
        }
        if u == 0.0 || !u.is_finite() {
            return Err(Error::Domain { what: "u", value: u });
        }
        let base = -logit(p);
        let spread = logit(1.0 - a);
        Ok(Self {
            p,
            u_star: u,
            gamma_upper: base + spread,
            gamma_lower: base - spread,
        })
    }

    /// Value of `X` at which the posterior reaches `1-A` at time `t`.
    pub fn upper_at(&self, t: f64) -> f64 {
        self.u_star * t / 2.0 + self.gamma_upper / self.u_star
    }

    /// Value of `X` at which the posterior reaches `A` at time `t`.
    pub fn lower_at(&self, t: f64) -> f64 {
        self.u_star * t / 2.0 + self.gamma_lower / self.u_star
    }

    /// Whether observing continues at `(t, x)`.
    pub fn continues(&self, t: f64, x: f64) -> bool {
        let (a, b) = (self.lower_at(t), self.upper_at(t));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        x > lo && x < hi
    }
}

/// Maximum violations of the variational inequalities on a grid.
///
/// (i) is `V ≤ g`. (ii) is `inf_u [½V''(π)(uπ(1-π))² + φ(u)] + c ≥ 0`,
/// reported per unit `u²` as the shortfall of `½V''π²(1-π)² + M` below 0.
/// (iii) is `(g - V)·inf_u[...] = 0`, evaluated along the minimiser or a
/// bounded minimising sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViReport {
    pub grid_n: usize,
    pub points_checked: usize,
    pub max_violation_i: f64,
    pub max_violation_ii: f64,
    /// `None` when the minimising sequence of `η` is unbounded.
    pub max_violation_iii: Option<f64>,
    /// `|V'(A*-) - V'(A*+)|` as in [`Solution::smooth_fit_residual`].
    pub smooth_fit_residual: f64,
}

impl ViReport {
    pub fn holds_i(&self, tol: f64) -> bool {
        self.max_violation_i <= tol
    }

    pub fn holds_ii(&self, tol: f64) -> bool {
        self.max_violation_ii <= tol
    }

    /// `None` when (iii) was not evaluated.
    pub fn holds_iii(&self, tol: f64) -> Option<bool> {
        self.max_violation_iii.map(|v| v <= tol)
    }

    pub fn holds_smooth_fit(&self, tol: f64) -> bool {
        self.smooth_fit_residual <= tol
    }

    pub fn all_hold(&self, tol: f64) -> bool {
        self.holds_i(tol) && self.holds_ii(tol) && self.holds_iii(tol) != Some(false) && self.holds_smooth_fit(tol)
    }
}

/// Checks the variational inequalities on the grid `π_i = (i + ½)/grid_n`
/// minus small neighbourhoods of `A*` and `1-A*`.
pub fn verify_vi(sol: &Solution, grid_n: usize) -> Result<ViReport> {
    let cost = &sol.cost;
    let m = match (sol.regime, sol.m) {
        (Regime::NegativeM, _) | (_, ExtReal::NegInfinity) => {
            return Err(Error::NotApplicable("variational inequalities need M >= 0"))
        }
        (_, ExtReal::Finite(m)) => m,
    };
    if grid_n == 0 {
        return Err(Error::Domain { what: "grid_n", value: 0.0 });
    }
    let seq = sol.eta.sequence;
    let probes: Vec<(f64, f64)> = if seq.is_bounded() {
        let mut v: Vec<(f64, f64)> = (1..=EPSILON_TERMS)
            .map(|n| seq.term(n))
            .chain(sol.eta.u_star)
            .map(|u| Ok((u, eta(cost, u)?)))
            .collect::<Result<_>>()?;
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    } else {
        Vec::new()
    };
    let a = sol.a_star;
    let mut report = ViReport {
        grid_n,
        points_checked: 0,
        max_violation_i: 0.0,
        max_violation_ii: 0.0,
        max_violation_iii: if seq.is_bounded() { Some(0.0) } else { None },
        smooth_fit_residual: sol.smooth_fit_residual(),
    };
    for i in 0..grid_n {
        let pi = (i as f64 + 0.5) / grid_n as f64;
        if sol.regime == Regime::PositiveM && (fabs(pi - a) < VI_EXCLUSION || fabs(pi - (1.0 - a)) < VI_EXCLUSION) {
            continue;
        }
        report.points_checked += 1;
        let v = sol.value(pi)?.to_f64();
        let g = sol.g(pi);
        report.max_violation_i = report.max_violation_i.max(v - g);
        let s = pi * (1.0 - pi);
        let q = 0.5 * sol.value_d2(pi)? * s * s;
        report.max_violation_ii = report.max_violation_ii.max(-(q + m));
        if let Some(worst) = report.max_violation_iii.as_mut() {
            let inner = probes
                .iter()
                .map(|&(u, e)| u * u * (q + e))
                .fold(f64::INFINITY, f64::min);
            *worst = worst.max(fabs((g - v) * inner));
        }
    }
    Ok(report)
}
