//! Path simulation of the posterior under a constant control, in three
//! equivalent representations, and Monte Carlo estimators built on it.
//!
//! Every path draws from its own ChaCha8 stream selected by
//! `(seed, path_index)`, so outcomes do not depend on how paths are
//! scheduled. Estimators sum in path order with pairwise summation.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::{exp, fabs, logit, pairwise_sum, sigmoid, sqrt};
use crate::stats::expected_exit_time;

/// Largest admissible time step.
pub const MAX_DT: f64 = 1e-2;
/// Default time step for acceptance-grade runs.
pub const DEFAULT_DT: f64 = 1e-4;
/// Default horizon as a multiple of the closed-form expected exit time.
pub const T_MAX_FACTOR: f64 = 1e3;
/// Bridge-crossing exponents above this are treated as probability 0.
const BRIDGE_EXPONENT_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// `θ ~ Bernoulli(p)`.
    Bernoulli,
    Fixed0,
    Fixed1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Time-stepping of `dΠ = uΠ(1-Π) dB` driven by the observation.
    PiEuler,
    /// Exact Gaussian steps of the log-likelihood ratio
    /// `Y = logit Π`, `dY = (u²/2)(2θ-1) dt + u dW`.
    LogitExact,
    /// Steps of the observation `dX = θu dt + dW`, mapped to the posterior
    /// through `L = exp(uX - u²t/2)`.
    StrongX,
}

/// Discretisation used by [`Representation::PiEuler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiScheme {
    EulerMaruyama,
    /// Euler plus the `½bb'(ΔW² - dt)` correction; strong order 1.
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub p: f64,
    pub u: f64,
    /// Stopping at the first exit of `(delta, 1-delta)`; 0 disables
    /// stopping.
    pub delta: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub t_max: f64,
    pub seed: u64,
    pub theta_mode: ThetaMode,
    pub representation: Representation,
    pub pi_scheme: PiScheme,
    /// Brownian-bridge test for crossings between grid points in the
    /// logit representations.
    pub bridge_correction: bool,
}

/// Builder for [`SimConfig`] with validating [`SimConfigBuilder::build`].
#[derive(Debug, Clone, Copy)]
pub struct SimConfigBuilder {
    cfg: SimConfig,
    t_max_set: bool,
}

impl SimConfig {
    /// Starts a configuration with prior `p`, control `u` and boundary
    /// `delta`; everything else takes its default.
    pub fn builder(p: f64, u: f64, delta: f64, seed: u64) -> SimConfigBuilder {
        SimConfigBuilder {
            cfg: SimConfig {
                p,
                u,
                delta,
                dt: DEFAULT_DT,
                n_paths: 1,
                t_max: f64::NAN,
                seed,
                theta_mode: ThetaMode::Bernoulli,
                representation: Representation::LogitExact,
                pi_scheme: PiScheme::Milstein,
                bridge_correction: true,
            },
            t_max_set: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str, v: f64| Err(Error::Config(alloc::format!("{msg} ({v})")));
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad("prior must lie in (0, 1)", self.p);
        }
        if self.u == 0.0 || !self.u.is_finite() {
            return bad("control must be a nonzero real", self.u);
        }
        if !(self.delta >= 0.0 && self.delta < 0.5) {
            return bad("boundary must lie in [0, 0.5)", self.delta);
        }
        if self.p < self.delta || self.p > 1.0 - self.delta {
            return bad("prior lies outside [delta, 1 - delta]", self.p);
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad("time step must lie in (0, 1e-2]", self.dt);
        }
        if self.n_paths == 0 {
            return bad("path count must be positive", 0.0);
        }
        if !(self.t_max > 0.0) {
            return bad("horizon must be positive", self.t_max);
        }
        Ok(())
    }
}

impl SimConfigBuilder {
    pub fn dt(mut self, dt: f64) -> Self {
        self.cfg.dt = dt;
        self
    }

    pub fn n_paths(mut self, n: u64) -> Self {
        self.cfg.n_paths = n;
        self
    }

    pub fn t_max(mut self, t_max: f64) -> Self {
        self.cfg.t_max = t_max;
        self.t_max_set = true;
        self
    }

    pub fn theta_mode(mut self, mode: ThetaMode) -> Self {
        self.cfg.theta_mode = mode;
        self
    }

    pub fn representation(mut self, r: Representation) -> Self {
        self.cfg.representation = r;
        self
    }

    pub fn pi_scheme(mut self, s: PiScheme) -> Self {
        self.cfg.pi_scheme = s;
        self
    }

    pub fn bridge_correction(mut self, on: bool) -> Self {
        self.cfg.bridge_correction = on;
        self
    }

    pub fn build(mut self) -> Result<SimConfig> {
        if !self.t_max_set {
            self.cfg.t_max = default_t_max(self.cfg.p, self.cfg.delta, self.cfg.u);
        }
        self.cfg.validate()?;
        Ok(self.cfg)
    }
}

/// `10³·E[τ]` from the closed form, at least 1; 10³ when there is no
/// boundary.
pub fn default_t_max(p: f64, delta: f64, u: f64) -> f64 {
    if delta <= 0.0 {
        return T_MAX_FACTOR;
    }
    expected_exit_time(p, delta, u)
        .map(|m| (T_MAX_FACTOR * m).max(1.0))
        .unwrap_or(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Lower,
    Upper,
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub path_index: u64,
    pub theta: u8,
    /// Exit time, or the horizon for censored paths.
    pub tau: f64,
    pub exit_side: ExitSide,
    /// Posterior at exit, clamped to the crossed boundary.
    pub pi_at_exit: f64,
}

/// The random stream of one path.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

fn draw_theta<R: Rng>(mode: ThetaMode, p: f64, rng: &mut R) -> u8 {
    match mode {
        ThetaMode::Fixed0 => 0,
        ThetaMode::Fixed1 => 1,
        ThetaMode::Bernoulli => u8::from(rng.random::<f64>() < p),
    }
}

/// Simulates one path until the posterior leaves `(delta, 1-delta)` or the
/// horizon is reached.
pub fn simulate_path(cfg: &SimConfig, path_index: u64) -> Result<PathOutcome> {
    cfg.validate()?;
    Ok(simulate_path_unchecked(cfg, path_index))
}

pub(crate) fn simulate_path_unchecked(cfg: &SimConfig, path_index: u64) -> PathOutcome {
    let mut rng = path_rng(cfg.seed, path_index);
    let theta = draw_theta(cfg.theta_mode, cfg.p, &mut rng);
    let done = |tau: f64, side: ExitSide, pi: f64| PathOutcome {
        path_index,
        theta,
        tau,
        exit_side: side,
        pi_at_exit: match side {
            ExitSide::Lower => cfg.delta,
            ExitSide::Upper => 1.0 - cfg.delta,
            ExitSide::Censored => pi,
        },
    };
    if cfg.delta > 0.0 {
        if cfg.p <= cfg.delta {
            return done(0.0, ExitSide::Lower, cfg.p);
        }
        if cfg.p >= 1.0 - cfg.delta {
            return done(0.0, ExitSide::Upper, cfg.p);
        }
    }
    let n_steps = steps_within(cfg.t_max, cfg.dt);
    match cfg.representation {
        Representation::PiEuler => run_pi(cfg, theta, n_steps, &mut rng, done),
        Representation::LogitExact | Representation::StrongX => run_logit(cfg, theta, n_steps, &mut rng, done),
    }
}

fn steps_within(t_max: f64, dt: f64) -> u64 {
    let n = libm::floor(t_max / dt + 1e-9);
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        n as u64
    }
}

fn run_logit<R: Rng>(
    cfg: &SimConfig,
    theta: u8,
    n_steps: u64,
    rng: &mut R,
    done: impl Fn(f64, ExitSide, f64) -> PathOutcome,
) -> PathOutcome {
    let u = cfg.u;
    let dt = cfg.dt;
    let sqrt_dt = sqrt(dt);
    let u2 = u * u;
    let y0 = logit(cfg.p);
    let gamma = if cfg.delta > 0.0 { logit(1.0 - cfg.delta) } else { f64::INFINITY };
    let sign = if theta == 1 { 1.0 } else { -1.0 };
    let logit_drift = sign * 0.5 * u2 * dt;
    let x_drift = f64::from(theta) * u * dt;
    let bridge_scale = 2.0 / (u2 * dt);
    let strong = cfg.representation == Representation::StrongX;

    let mut y = y0;
    let mut x = 0.0;
    for i in 1..=n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let t = i as f64 * dt;
        let y_new = if strong {
            x += x_drift + sqrt_dt * z;
            y0 + u * x - 0.5 * u2 * t
        } else {
            y + logit_drift + u * sqrt_dt * z
        };
        if y_new >= gamma {
            return done(t, ExitSide::Upper, sigmoid(y_new));
        }
        if y_new <= -gamma {
            return done(t, ExitSide::Lower, sigmoid(y_new));
        }
        if cfg.bridge_correction && gamma.is_finite() {
            let e_up = bridge_scale * (gamma - y) * (gamma - y_new);
            if e_up < BRIDGE_EXPONENT_CUTOFF && rng.random::<f64>() < exp(-e_up) {
                return done(t, ExitSide::Upper, sigmoid(y_new));
            }
            let e_lo = bridge_scale * (gamma + y) * (gamma + y_new);
            if e_lo < BRIDGE_EXPONENT_CUTOFF && rng.random::<f64>() < exp(-e_lo) {
                return done(t, ExitSide::Lower, sigmoid(y_new));
            }
        }
        y = y_new;
    }
    done(n_steps as f64 * dt, ExitSide::Censored, sigmoid(y))
}

/// One step of the posterior SDE driven by the Brownian increment `dw`
/// under `θ`.
#[inline]
fn pi_step(pi: f64, u: f64, theta: f64, dt: f64, dw: f64, scheme: PiScheme) -> f64 {
    let s = pi * (1.0 - pi);
    let b = u * s;
    // Innovation increment dB = dX - uΠ dt with dX = θu dt + dW.
    let db = dw + u * (theta - pi) * dt;
    let euler = pi + b * db;
    match scheme {
        PiScheme::EulerMaruyama => euler,
        PiScheme::Milstein => euler + 0.5 * b * u * (1.0 - 2.0 * pi) * (dw * dw - dt),
    }
}

fn run_pi<R: Rng>(
    cfg: &SimConfig,
    theta: u8,
    n_steps: u64,
    rng: &mut R,
    done: impl Fn(f64, ExitSide, f64) -> PathOutcome,
) -> PathOutcome {
    let dt = cfg.dt;
    let sqrt_dt = sqrt(dt);
    let th = f64::from(theta);
    let (lo, hi) = (cfg.delta, 1.0 - cfg.delta);
    let mut pi = cfg.p;
    for i in 1..=n_steps {
        let z: f64 = rng.sample(StandardNormal);
        pi = pi_step(pi, cfg.u, th, dt, sqrt_dt * z, cfg.pi_scheme);
        let t = i as f64 * dt;
        if pi >= hi {
            return done(t, ExitSide::Upper, pi);
        }
        if pi <= lo {
            return done(t, ExitSide::Lower, pi);
        }
    }
    done(n_steps as f64 * dt, ExitSide::Censored, pi)
}

/// Simulates all paths of `cfg` in index order.
pub fn run_paths(cfg: &SimConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    Ok((0..cfg.n_paths).map(|i| simulate_path_unchecked(cfg, i)).collect())
}

/// Sample mean with standard error `s/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    /// Paths that reached the horizon and were left out of the sample.
    pub censored_count: u64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64], censored_count: u64) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n: 0,
                censored_count,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        Self {
            mean,
            std_error: sqrt(var / n as f64),
            n: n as u64,
            censored_count,
        }
    }

    /// `|mean - target|` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error > 0.0 {
            fabs(self.mean - target) / self.std_error
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn censored(outcomes: &[PathOutcome]) -> u64 {
    outcomes.iter().filter(|o| o.exit_side == ExitSide::Censored).count() as u64
}

/// Mean exit time over uncensored paths, optionally restricted to one `θ`.
pub fn expected_tau(outcomes: &[PathOutcome], theta: Option<u8>) -> McEstimate {
    let sel: Vec<&PathOutcome> = outcomes.iter().filter(|o| theta.is_none_or(|t| o.theta == t)).collect();
    let taus: Vec<f64> = sel.iter().filter(|o| o.exit_side != ExitSide::Censored).map(|o| o.tau).collect();
    McEstimate::from_samples(&taus, (sel.len() - taus.len()) as u64)
}

/// Exit-side frequencies by `θ` and the error rates of the test that
/// decides 1 on the upper exit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub p_upper_given_1: McEstimate,
    pub p_upper_given_0: McEstimate,
    pub type1: McEstimate,
    pub type2: McEstimate,
    pub power: McEstimate,
}

pub fn decision_record(outcomes: &[PathOutcome]) -> DecisionRecord {
    let upper_freq = |theta: u8, upper_value: f64| {
        let sel: Vec<&PathOutcome> = outcomes.iter().filter(|o| o.theta == theta).collect();
        let xs: Vec<f64> = sel
            .iter()
            .filter(|o| o.exit_side != ExitSide::Censored)
            .map(|o| if o.exit_side == ExitSide::Upper { upper_value } else { 1.0 - upper_value })
            .collect();
        McEstimate::from_samples(&xs, censored(&sel.iter().map(|o| **o).collect::<Vec<_>>()))
    };
    let p1 = upper_freq(1, 1.0);
    let p0 = upper_freq(0, 1.0);
    DecisionRecord {
        p_upper_given_1: p1,
        p_upper_given_0: p0,
        type1: p0,
        type2: upper_freq(1, 0.0),
        power: p1,
    }
}

/// Sample means of `exp(-ατ)` for each `α`, optionally restricted to one
/// `θ`. Censored paths enter with `exp(-α·∞) = 0` (1 when `α = 0`).
pub fn laplace_estimates(outcomes: &[PathOutcome], theta: Option<u8>, alphas: &[f64]) -> Vec<McEstimate> {
    let sel: Vec<&PathOutcome> = outcomes.iter().filter(|o| theta.is_none_or(|t| o.theta == t)).collect();
    let n_cens = sel.iter().filter(|o| o.exit_side == ExitSide::Censored).count() as u64;
    alphas
        .iter()
        .map(|&alpha| {
            let xs: Vec<f64> = sel
                .iter()
                .map(|o| {
                    if alpha == 0.0 {
                        1.0
                    } else if o.exit_side == ExitSide::Censored {
                        0.0
                    } else {
                        exp(-alpha * o.tau)
                    }
                })
                .collect();
            McEstimate::from_samples(&xs, n_cens)
        })
        .collect()
}

/// Histogram of exit times on `bins` equal bins of `[0, t_hi)`, normalised
/// as a density over all selected paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Selected paths, including censored ones and exits past `t_hi`.
    pub n_total: u64,
    pub censored_count: u64,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Estimated density in each bin.
    pub fn density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.n_total as f64 * self.bin_width());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Standard error of each bin density.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.n_total as f64;
        let w = self.bin_width();
        self.counts
            .iter()
            .map(|&c| {
                let q = c as f64 / n;
                sqrt(q * (1.0 - q) / n) / w
            })
            .collect()
    }
}

pub fn tau_histogram(outcomes: &[PathOutcome], theta: Option<u8>, bins: usize, t_hi: f64) -> Result<Histogram> {
    if bins == 0 || !(t_hi > 0.0) {
        return Err(Error::Config("histogram needs bins > 0 and a positive range".into()));
    }
    let w = t_hi / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * w).collect();
    let mut counts = alloc::vec![0u64; bins];
    let mut n_total = 0;
    let mut n_cens = 0;
    for o in outcomes.iter().filter(|o| theta.is_none_or(|t| o.theta == t)) {
        n_total += 1;
        if o.exit_side == ExitSide::Censored {
            n_cens += 1;
            continue;
        }
        let b = (o.tau / w) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        n_total,
        censored_count: n_cens,
    })
}

/// Posterior paths on the grid `0, dt, 2dt, …` driven by the Brownian
/// increments `dw`, without stopping.
pub fn trace_pi(p: f64, u: f64, theta: u8, dt: f64, dw: &[f64], scheme: PiScheme) -> Vec<f64> {
    let th = f64::from(theta);
    let mut out = Vec::with_capacity(dw.len() + 1);
    let mut pi = p;
    out.push(pi);
    for &d in dw {
        pi = pi_step(pi, u, th, dt, d, scheme);
        out.push(pi);
    }
    out
}

/// Posterior from the observation `X` through the likelihood ratio.
pub fn trace_strong_x(p: f64, u: f64, theta: u8, dt: f64, dw: &[f64]) -> Vec<f64> {
    let y0 = logit(p);
    let mut out = Vec::with_capacity(dw.len() + 1);
    let mut x = 0.0;
    out.push(p);
    for (i, &d) in dw.iter().enumerate() {
        x += f64::from(theta) * u * dt + d;
        let t = (i + 1) as f64 * dt;
        out.push(sigmoid(y0 + u * x - 0.5 * u * u * t));
    }
    out
}

/// Posterior from exact steps of the log-likelihood ratio.
pub fn trace_logit(p: f64, u: f64, theta: u8, dt: f64, dw: &[f64]) -> Vec<f64> {
    let drift = if theta == 1 { 0.5 } else { -0.5 } * u * u * dt;
    let mut y = logit(p);
    let mut out = Vec::with_capacity(dw.len() + 1);
    out.push(p);
    for &d in dw {
        y += drift + u * d;
        out.push(sigmoid(y));
    }
    out
}

/// Pathwise comparison of the representations on shared Brownian paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    pub dt: f64,
    pub horizon: f64,
    /// Per path, `max_t |Π_euler - Π_likelihood|` at step `dt`.
    pub max_dev_coarse: Vec<f64>,
    /// The same at step `dt/2` on the refined Brownian path.
    pub max_dev_fine: Vec<f64>,
    /// Largest `|Π_logit - Π_likelihood|` over all paths and grid points.
    pub logit_vs_strong: f64,
}

impl CrosscheckReport {
    /// Mean fine deviation over mean coarse deviation; about `2^-order`.
    pub fn error_ratio(&self) -> f64 {
        pairwise_sum(&self.max_dev_fine) / pairwise_sum(&self.max_dev_coarse)
    }

    pub fn mean_coarse(&self) -> f64 {
        pairwise_sum(&self.max_dev_coarse) / self.max_dev_coarse.len() as f64
    }
}

/// Runs `cfg.n_paths` unstopped paths over `[0, horizon]` at steps `cfg.dt`
/// and `cfg.dt/2` sharing one Brownian path per index.
pub fn crosscheck_representations(cfg: &SimConfig, horizon: f64) -> Result<CrosscheckReport> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(alloc::format!("horizon must be positive ({horizon})")));
    }
    let n_coarse = steps_within(horizon, cfg.dt) as usize;
    let half = 0.5 * cfg.dt;
    let sd = sqrt(half);
    let max_dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| fabs(x - y)).fold(0.0, f64::max);
    let mut report = CrosscheckReport {
        dt: cfg.dt,
        horizon,
        max_dev_coarse: Vec::with_capacity(cfg.n_paths as usize),
        max_dev_fine: Vec::with_capacity(cfg.n_paths as usize),
        logit_vs_strong: 0.0,
    };
    for i in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.seed, i);
        let theta = draw_theta(cfg.theta_mode, cfg.p, &mut rng);
        let fine: Vec<f64> = (0..2 * n_coarse).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let coarse: Vec<f64> = fine.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        for (dw, dt, out) in [
            (&coarse, cfg.dt, &mut report.max_dev_coarse),
            (&fine, half, &mut report.max_dev_fine),
        ] {
            let exact = trace_strong_x(cfg.p, cfg.u, theta, dt, dw);
            let euler = trace_pi(cfg.p, cfg.u, theta, dt, dw, cfg.pi_scheme);
            out.push(max_dev(&euler, &exact));
        }
        let exact = trace_strong_x(cfg.p, cfg.u, theta, cfg.dt, &coarse);
        let logit = trace_logit(cfg.p, cfg.u, theta, cfg.dt, &coarse);
        report.logit_vs_strong = report.logit_vs_strong.max(max_dev(&logit, &exact));
    }
    Ok(report)
}
