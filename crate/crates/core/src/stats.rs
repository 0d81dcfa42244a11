//! Operating characteristics of the threshold test: exit probabilities,
//! conditional mean stopping times, Laplace transforms and densities of the
//! stopping time, and Type I/II error summaries.
//!
//! Everything is expressed in logit coordinates. With `y = ln(π/(1-π))` and
//! `Γ = ln((1-A)/A)`, the log-likelihood ratio under `θ = 1` is
//! `y + u²t/2 + uW_t`, a Brownian motion with drift that stops on leaving
//! `(-Γ, Γ)`. Under `θ = 0` the drift changes sign.

use crate::error::{Error, Result};
use crate::geometry::psi_unchecked;
use crate::math::{exp, fabs, log, logit};
use crate::solver::{Regime, Solution};

/// Default number of series terms on each side.
pub const DEFAULT_TRUNCATION: u32 = 50;
/// Series terms below this fraction of the running sum end the summation.
pub const SERIES_EARLY_EXIT: f64 = 1e-16;
/// A final term above this fraction of the sum flags the value as truncated.
pub const SERIES_TRUNCATION_WARN: f64 = 1e-14;

fn check_boundary(a: f64) -> Result<()> {
    if a > 0.0 && a < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain { what: "A", value: a })
    }
}

fn check_prior(a: f64, pi: f64) -> Result<()> {
    if pi >= a && pi <= 1.0 - a {
        Ok(())
    } else {
        Err(Error::Domain { what: "pi", value: pi })
    }
}

fn check_control(u: f64) -> Result<()> {
    if u != 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "u", value: u })
    }
}

fn check_theta(theta: u8) -> Result<()> {
    if theta <= 1 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "theta",
            value: theta as f64,
        })
    }
}

/// Probabilities of exiting `(A, 1-A)` through `1-A` given `θ = 1` and
/// given `θ = 0`.
pub fn decision_probabilities(a: f64, pi: f64) -> Result<(f64, f64)> {
    check_boundary(a)?;
    check_prior(a, pi)?;
    let width = 1.0 - 2.0 * a;
    let up_1 = (1.0 - a) * (pi - a) / (width * pi);
    let up_0 = a * (pi - a) / (width * (1.0 - pi));
    Ok((up_1.clamp(0.0, 1.0), up_0.clamp(0.0, 1.0)))
}

/// `E[τ | θ = 1]` and `E[τ | θ = 0]` for the exit time of `(A, 1-A)` under
/// the constant control `u`.
pub fn conditional_mean_tau(a: f64, pi: f64, u: f64) -> Result<(f64, f64)> {
    check_control(u)?;
    let (up_1, up_0) = decision_probabilities(a, pi)?;
    let gamma = logit(1.0 - a);
    let y = logit(pi);
    let scale = 2.0 / (u * u);
    let m1 = scale * (2.0 * gamma * up_1 - (gamma + y));
    let m0 = scale * ((gamma + y) - 2.0 * gamma * up_0);
    Ok((m1.max(0.0), m0.max(0.0)))
}

/// Unconditional expected exit time of `(δ, 1-δ)` from `π` under the
/// constant control `u`: `(2/u²)(Ψ(π) - Ψ(δ))`, and 0 outside the interval.
pub fn expected_exit_time(pi: f64, delta: f64, u: f64) -> Result<f64> {
    check_control(u)?;
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Domain { what: "delta", value: delta });
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::Domain { what: "pi", value: pi });
    }
    if pi <= delta || pi >= 1.0 - delta {
        return Ok(0.0);
    }
    Ok(2.0 / (u * u) * (psi_unchecked(pi) - psi_unchecked(delta)))
}

/// `sinh(x)/sinh(z)` multiplied by `exp(shift)`, for `0 ≤ x ≤ z`, `z > 0`.
fn sinh_ratio(shift: f64, x: f64, z: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    exp(shift + x - z) * libm::expm1(-2.0 * x) / libm::expm1(-2.0 * z)
}

/// `E[exp(-ατ) | θ]` for the exit time of `(A, 1-A)`.
pub fn laplace_tau(a: f64, pi: f64, u: f64, alpha: f64, theta: u8) -> Result<f64> {
    check_boundary(a)?;
    check_prior(a, pi)?;
    check_control(u)?;
    check_theta(theta)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain { what: "alpha", value: alpha });
    }
    let gamma = logit(1.0 - a);
    let y = if theta == 1 { logit(pi) } else { -logit(pi) };
    let beta = libm::sqrt(2.0 * alpha / (u * u) + 0.25);
    let z = 2.0 * gamma * beta;
    let upper = sinh_ratio((gamma - y) / 2.0, (y + gamma) * beta, z);
    let lower = sinh_ratio(-(gamma + y) / 2.0, (gamma - y) * beta, z);
    Ok((upper + lower).min(1.0))
}

/// A density value and whether the series was cut before converging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEval {
    pub value: f64,
    pub truncated: bool,
}

/// Density of the exit time of `(A, 1-A)` given `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySeries {
    pub a: f64,
    pub pi: f64,
    pub u: f64,
    pub theta: u8,
    pub truncation_k: u32,
}

impl DensitySeries {
    pub fn new(a: f64, pi: f64, u: f64, theta: u8) -> Result<Self> {
        Self::with_truncation(a, pi, u, theta, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(a: f64, pi: f64, u: f64, theta: u8, truncation_k: u32) -> Result<Self> {
        check_boundary(a)?;
        check_control(u)?;
        check_theta(theta)?;
        if !(pi > a && pi < 1.0 - a) {
            return Err(Error::Domain { what: "pi", value: pi });
        }
        if truncation_k == 0 {
            return Err(Error::Domain {
                what: "truncation",
                value: 0.0,
            });
        }
        Ok(Self {
            a,
            pi,
            u,
            theta,
            truncation_k,
        })
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.value)
    }

    pub fn eval(&self, t: f64) -> Result<DensityEval> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain { what: "t", value: t });
        }
        let gamma = logit(1.0 - self.a);
        let y = if self.theta == 1 { logit(self.pi) } else { -logit(self.pi) };
        let u2 = self.u * self.u;
        let s = u2 * t;
        let base = log(u2) - s / 8.0;
        let k = self.truncation_k;
        let lower = exit_kernel(base - (gamma + y) / 2.0, s, gamma - y, 2.0 * gamma, k);
        let upper = exit_kernel(base + (gamma - y) / 2.0, s, y + gamma, 2.0 * gamma, k);
        Ok(DensityEval {
            value: (lower.value + upper.value).max(0.0),
            truncated: lower.truncated || upper.truncated,
        })
    }
}

/// `exp(log_scale)` times the density at time `s` of a standard Brownian
/// motion started at `x ∈ (0, l)` hitting `l` before 0.
///
/// The image series `Σ_k d_k/√(2πs³) exp(-d_k²/2s)`, `d_k = l - x + 2kl`,
/// converges fast for `s ≤ l²`. For larger `s` the equivalent sine series
/// `Σ_n (nπ/l²)(-1)^(n+1) sin(nπx/l) exp(-n²π²s/2l²)` avoids the
/// cancellation between image terms.
fn exit_kernel(log_scale: f64, s: f64, x: f64, l: f64, k_max: u32) -> DensityEval {
    if s <= l * l {
        image_series(log_scale, s, x, l, k_max)
    } else {
        sine_series(log_scale, s, x, l, k_max)
    }
}

fn image_series(log_scale: f64, s: f64, x: f64, l: f64, k_max: u32) -> DensityEval {
    let log_norm = log_scale - 0.5 * log(2.0 * core::f64::consts::PI) - 1.5 * log(s);
    let term = |k: i64| -> f64 {
        let d = l - x + 2.0 * k as f64 * l;
        if d == 0.0 {
            return 0.0;
        }
        let mag = exp(log_norm + log(fabs(d)) - d * d / (2.0 * s));
        if d < 0.0 {
            -mag
        } else {
            mag
        }
    };
    let mut sum = term(0);
    let mut last = fabs(sum);
    for k in 1..=k_max as i64 {
        let pair = term(k) + term(-k);
        last = fabs(term(k)).max(fabs(term(-k)));
        sum += pair;
        if last <= SERIES_EARLY_EXIT * fabs(sum) {
            return DensityEval {
                value: sum,
                truncated: false,
            };
        }
    }
    DensityEval {
        value: sum,
        truncated: last > SERIES_TRUNCATION_WARN * fabs(sum),
    }
}

fn sine_series(log_scale: f64, s: f64, x: f64, l: f64, k_max: u32) -> DensityEval {
    let pi = core::f64::consts::PI;
    let mut sum = 0.0;
    let mut last = 0.0;
    for n in 1..=k_max {
        let nf = n as f64;
        last = exp(log_scale + log(nf * pi / (l * l)) - nf * nf * pi * pi * s / (2.0 * l * l));
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * last * libm::sin(nf * pi * x / l);
        if last <= SERIES_EARLY_EXIT * fabs(sum) {
            return DensityEval {
                value: sum,
                truncated: false,
            };
        }
    }
    DensityEval {
        value: sum,
        truncated: last > SERIES_TRUNCATION_WARN * fabs(sum),
    }
}

/// Error rates and mean durations of the threshold test with decision
/// `1` on exit through `1-A` and `0` on exit through `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestCharacteristics {
    pub a: f64,
    pub pi: f64,
    pub u: f64,
    pub p_upper_1: f64,
    pub p_upper_0: f64,
    pub mean_tau_1: f64,
    pub mean_tau_0: f64,
    /// Probability of deciding 1 when `θ = 0`.
    pub type1: f64,
    /// Probability of deciding 0 when `θ = 1`.
    pub type2: f64,
    pub power: f64,
    /// The prior lies in the stopping region, so the decision is made
    /// without observing.
    pub degenerate: bool,
}

/// Characteristics of the threshold test at `(A, π, u)`.
///
/// A prior at or above `1-A` decides 1 immediately (Type I error 1, power
/// 1); a prior at or below `A` decides 0 immediately.
pub fn characteristics_at(a: f64, pi: f64, u: f64) -> Result<TestCharacteristics> {
    check_control(u)?;
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain { what: "pi", value: pi });
    }
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::Domain { what: "A", value: a });
    }
    if a < 0.5 && pi > a && pi < 1.0 - a {
        let (p_upper_1, p_upper_0) = decision_probabilities(a, pi)?;
        let (mean_tau_1, mean_tau_0) = conditional_mean_tau(a, pi, u)?;
        return Ok(TestCharacteristics {
            a,
            pi,
            u,
            p_upper_1,
            p_upper_0,
            mean_tau_1,
            mean_tau_0,
            type1: p_upper_0,
            type2: 1.0 - p_upper_1,
            power: p_upper_1,
            degenerate: false,
        });
    }
    let up = if pi >= 0.5 && pi >= 1.0 - a { 1.0 } else { 0.0 };
    Ok(TestCharacteristics {
        a,
        pi,
        u,
        p_upper_1: up,
        p_upper_0: up,
        mean_tau_1: 0.0,
        mean_tau_0: 0.0,
        type1: up,
        type2: 1.0 - up,
        power: up,
        degenerate: true,
    })
}

/// Characteristics of the optimal test of a solution with `M > 0` and an
/// attained optimal control.
pub fn characteristics(sol: &Solution, pi: f64) -> Result<TestCharacteristics> {
    if sol.regime() != Regime::PositiveM {
        return Err(Error::NotApplicable("characteristics need M > 0"));
    }
    let u = sol
        .u_star()
        .ok_or(Error::NotApplicable("characteristics need an attained optimal control"))?;
    characteristics_at(sol.a_star(), pi, u)
}
