//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status when any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctlseq::{cmd_figures, run_paths_parallel, RunConfig};
use ctlseq_core::simulate::{
    crosscheck_representations, decision_record, expected_tau, laplace_estimates, tau_histogram, ExitSide, PiScheme,
};
use ctlseq_core::solver::{solve, verify_vi, DEFAULT_VI_GRID};
use ctlseq_core::stats::{conditional_mean_tau, decision_probabilities, expected_exit_time, laplace_tau};
use ctlseq_core::{
    ControlSet, CostModel, DensitySeries, ExtReal, McEstimate, PenaltyModel, Regime, Representation, SimConfig,
    ThetaMode,
};
use rand::{Rng, SeedableRng};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(est: &McEstimate, target: f64, k: f64) -> bool {
    (est.mean - target).abs() <= k * est.std_error
}

fn classic_oracle(k: f64) -> f64 {
    let psi1 = |p: f64| (1.0 - 2.0 * p) / (p * (1.0 - p)) - 2.0 * (p / (1.0 - p)).ln();
    let (mut lo, mut hi) = (1e-15_f64, 0.5_f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - k * psi1(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn quadratic(penalty: PenaltyModel, a: f64, b: f64, c: f64) -> ctlseq_core::Solution {
    solve(&penalty, &CostModel::quadratic(a, b, c).unwrap(), &ControlSet::nonzero_reals()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let sol = quadratic(PenaltyModel::classic(), 1.0, 1.0, 1.0);
    let elapsed = start.elapsed();
    let oracle = classic_oracle(1.5);
    let err = (sol.a_star() - oracle).abs();
    let pass = sol.m() == ExtReal::Finite(0.75)
        && sol.u_star() == Some(-2.0)
        && err <= 1e-10
        && elapsed < Duration::from_secs(1);
    Outcome::new(
        pass,
        format!("M = {}, u* = {:?}, A* = {}, |A* - oracle| = {err:.2e}, {elapsed:.2?}", sol.m(), sol.u_star(), sol.a_star()),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (p, delta, u)) in [(0.5, 0.25, 1.0), (0.5, 0.25, 2.0), (0.7, 0.1, 1.0)].into_iter().enumerate() {
        let start = Instant::now();
        let cfg = SimConfig::builder(p, u, delta, SEED + i as u64)
            .n_paths(100_000)
            .dt(1e-4)
            .representation(Representation::LogitExact)
            .bridge_correction(true)
            .build()
            .unwrap();
        let outcomes = run_paths_parallel(&cfg).unwrap();
        let est = expected_tau(&outcomes, None);
        let elapsed = start.elapsed();
        let target = expected_exit_time(p, delta, u).unwrap();
        let ok = within(&est, target, 3.0) && est.censored_count == 0 && elapsed < Duration::from_secs(120);
        pass &= ok;
        parts.push(format!(
            "({p}, {delta}, {u}): {:.5} ± {:.5} vs {target:.5} z = {:+.2} {elapsed:.1?}",
            est.mean,
            est.std_error,
            est.z_score(target)
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + h * i as f64);
    }
    s * h / 3.0
}

fn criterion_3() -> Outcome {
    let (a, p, u) = (0.25, 0.5, 1.0);
    let alphas = [0.5, 1.0, 2.0];
    let start = Instant::now();
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut hist_detail = String::new();
    for (theta, mode) in [(1u8, ThetaMode::Fixed1), (0u8, ThetaMode::Fixed0)] {
        let cfg = SimConfig::builder(p, u, a, SEED + 10 + u64::from(theta))
            .n_paths(100_000)
            .theta_mode(mode)
            .build()
            .unwrap();
        let outcomes = run_paths_parallel(&cfg).unwrap();
        let idx = usize::from(theta == 0);
        let probs = decision_probabilities(a, p).unwrap();
        let means = conditional_mean_tau(a, p, u).unwrap();
        let record = decision_record(&outcomes);
        let p_est = if theta == 1 { record.p_upper_given_1 } else { record.p_upper_given_0 };
        let mut pairs = vec![
            (p_est, [probs.0, probs.1][idx]),
            (expected_tau(&outcomes, Some(theta)), [means.0, means.1][idx]),
        ];
        for (alpha, est) in alphas.iter().zip(laplace_estimates(&outcomes, Some(theta), &alphas)) {
            pairs.push((est, laplace_tau(a, p, u, *alpha, theta).unwrap()));
        }
        for (est, target) in pairs {
            checks += 1;
            worst = worst.max(est.z_score(target).abs());
            pass &= within(&est, target, 3.0);
        }

        if theta == 1 {
            let bins = 50;
            let t_hi = 6.0;
            let hist = tau_histogram(&outcomes, Some(1), bins, t_hi).unwrap();
            let series = DensitySeries::new(a, p, u, 1).unwrap();
            let n = hist.n_total as f64;
            let w = hist.bin_width();
            let dens = hist.density();
            let mut worst_bin: f64 = 0.0;
            let mut failing = 0;
            for i in 0..bins {
                let (lo, hi) = (hist.edges[i], hist.edges[i + 1]);
                let mass = simpson(|t| if t > 0.0 { series.density(t).unwrap() } else { 0.0 }, lo, hi, 64);
                let se = (mass * (1.0 - mass) / n).sqrt() / w;
                let z = if se > 0.0 { (dens[i] - mass / w).abs() / se } else { 0.0 };
                worst_bin = worst_bin.max(z);
                if z > 3.0 {
                    failing += 1;
                }
            }
            pass &= failing == 0;
            hist_detail = format!("histogram: {failing} of {bins} bins beyond 3 SE, max |z| = {worst_bin:.2}");
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    Outcome::new(pass, format!("{checks} moments, max |z| = {worst:.2}; {hist_detail}; {elapsed:.1?}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let tol = 1e-8;
    let preset = quadratic(PenaltyModel::classic(), 1.0, 1.0, 1.0);
    let rep = verify_vi(&preset, DEFAULT_VI_GRID).unwrap();
    let mut pass = rep.all_hold(tol);
    let mut detail = format!(
        "preset: (i) {:.1e} (ii) {:.1e} (iii) {:?} smooth fit {:.1e}",
        rep.max_violation_i, rep.max_violation_ii, rep.max_violation_iii, rep.smooth_fit_residual
    );
    let ce = quadratic(PenaltyModel::cross_entropy(), 0.05, 0.1, 0.01);
    let applicable = ce.regime() == Regime::PositiveM && ce.a_star() < 0.5;
    if applicable {
        let rep = verify_vi(&ce, DEFAULT_VI_GRID).unwrap();
        pass &= rep.all_hold(tol);
        detail += &format!("; cross-entropy (0.05, 0.1, 0.01): max violation {:.1e}", rep.max_violation_ii);
    } else {
        detail += &format!(
            "; cross-entropy (0.05, 0.1, 0.01): regime {:?} with M = {}, not applicable",
            ce.regime(),
            ce.m()
        );
    }
    let ce = quadratic(PenaltyModel::cross_entropy(), 0.1, 0.1, 0.1);
    let rep = verify_vi(&ce, DEFAULT_VI_GRID).unwrap();
    pass &= ce.regime() == Regime::PositiveM && ce.a_star() < 0.5 && rep.all_hold(tol);
    detail += &format!(
        "; cross-entropy (0.1, 0.1, 0.1): A* = {:.6}, (ii) {:.1e}",
        ce.a_star(),
        rep.max_violation_ii
    );
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    Outcome::new(pass, format!("{detail}; {elapsed:.2?}"))
}

fn criterion_5() -> Outcome {
    let cfg = SimConfig::builder(0.5, 1.0, 0.0, SEED + 20)
        .n_paths(64)
        .dt(1e-3)
        .theta_mode(ThetaMode::Fixed1)
        .representation(Representation::PiEuler)
        .pi_scheme(PiScheme::Milstein)
        .build()
        .unwrap();
    let rep = crosscheck_representations(&cfg, 5.0).unwrap();
    let ratio = rep.error_ratio();
    let pass = (0.4..=0.6).contains(&ratio) && rep.logit_vs_strong <= 1e-10;
    Outcome::new(
        pass,
        format!(
            "ratio {ratio:.3} (mean deviation {:.2e} at dt = 1e-3), logit vs likelihood {:.1e}",
            rep.mean_coarse(),
            rep.logit_vs_strong
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = SimConfig::builder(0.5, 1.0, 1e-4, SEED + 30)
        .n_paths(10_000)
        .theta_mode(ThetaMode::Fixed1)
        .build()
        .unwrap();
    let outcomes = run_paths_parallel(&cfg).unwrap();
    let upper = outcomes.iter().filter(|o| o.exit_side == ExitSide::Upper).count();
    let frac = upper as f64 / outcomes.len() as f64;
    Outcome::new(frac >= 0.99, format!("{upper} of {} paths exit upper ({:.4})", outcomes.len(), frac))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn nondecreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0])
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg: RunConfig = format!("[output]\ndir = {}\n", dir.path().display()).parse().unwrap();
    if let Err(e) = cmd_figures(&cfg, &mut std::io::sink()) {
        return Outcome::new(false, format!("figures failed: {e}"));
    }
    let mut pass = true;
    let mut notes = Vec::new();

    let (h1, fig1) = read_csv(&dir.path().join("fig1_boundaries.csv"));
    pass &= h1 == ["sweep", "a", "b", "c", "regime", "M", "u_star", "A_star", "upper"];
    let sweep = |name: &str, col: usize| -> (Vec<f64>, Vec<f64>) {
        fig1.iter().filter(|r| r[0] == name).map(|r| (num(&r[col]), num(&r[7]))).unzip()
    };
    let (a_x, a_star_a) = sweep("a", 1);
    let (b_x, a_star_b) = sweep("b", 2);
    let (c_x, a_star_c) = sweep("c", 3);
    let b_abs_sorted = b_x.windows(2).all(|w| w[1].abs() >= w[0].abs());
    let mono = nondecreasing(&a_x)
        && nondecreasing(&c_x)
        && b_abs_sorted
        && nondecreasing(&a_star_a)
        && nondecreasing(&a_star_c)
        && a_star_b.windows(2).all(|w| w[1] <= w[0]);
    pass &= mono;
    notes.push(format!("A* monotone in a, c, |b|: {mono}"));
    let near = fig1.iter().find(|r| r[0] == "b" && num(&r[2]) == 2.0 - 1e-6).map(|r| num(&r[7]));
    pass &= near.is_some_and(|a| a <= 1e-3);
    notes.push(format!("A*(b = 2 - 1e-6) = {near:?}"));

    let (h2, fig2) = read_csv(&dir.path().join("fig2_value.csv"));
    pass &= h2 == ["sweep", "a", "b", "c", "pi", "value", "g"];
    let dev = fig2
        .iter()
        .filter(|r| r[0] == "a" && num(&r[1]) == 1e4)
        .map(|r| (num(&r[5]) - num(&r[6])).abs())
        .fold(f64::NAN, f64::max);
    pass &= dev <= 1e-3;
    notes.push(format!("max |V - g| at a = 1e4: {dev:.2e}"));
    let v_crit = fig2
        .iter()
        .filter(|r| r[0] == "b" && num(&r[2]) == 2.0)
        .map(|r| num(&r[5]).abs())
        .fold(f64::NAN, f64::max);
    let v_near = fig2
        .iter()
        .filter(|r| r[0] == "b" && num(&r[2]) == 2.0 - 1e-6)
        .map(|r| num(&r[5]).abs())
        .fold(f64::NAN, f64::max);
    pass &= v_crit == 0.0 && v_near < 1e-2;
    notes.push(format!("max V at b = 2 - 1e-6: {v_near:.2e}, at b = 2: {v_crit}"));

    let (h3, fig3) = read_csv(&dir.path().join("fig3_densities.csv"));
    pass &= h3 == ["b", "theta", "t", "density"];
    let all_b = [1.28, 1.31, 1.34, 1.37, 1.4].iter().all(|b| fig3.iter().any(|r| num(&r[0]) == *b));
    pass &= all_b;
    notes.push(format!("densities for all five b: {all_b}"));

    let (h4, fig4) = read_csv(&dir.path().join("fig3_errors.csv"));
    pass &= h4 == ["parameter", "type1", "type2", "power", "mean_tau_1", "mean_tau_0"];
    let type1: Vec<f64> = fig4
        .iter()
        .filter(|r| (1.28..=1.4).contains(&num(&r[0])))
        .map(|r| num(&r[1]))
        .collect();
    let type1_mono = type1.len() >= 2 && type1.windows(2).all(|w| w[1] <= w[0]);
    pass &= type1_mono;
    notes.push(format!("type I nonincreasing over {} points in [1.28, 1.4]: {type1_mono}", type1.len()));

    Outcome::new(pass, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(SEED);
    let mut worst_mix: f64 = 0.0;
    let mut worst_deriv: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.random_range(0.01..0.45);
        let p = rng.random_range(a..1.0 - a);
        let u = rng.random_range(0.5..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let (m1, m0) = conditional_mean_tau(a, p, u).unwrap();
        let total = expected_exit_time(p, a, u).unwrap();
        worst_mix = worst_mix.max((p * m1 + (1.0 - p) * m0 - total).abs());
        let h = 1e-6;
        for (theta, mean) in [(1u8, m1), (0u8, m0)] {
            let l = |alpha: f64| laplace_tau(a, p, u, alpha, theta).unwrap();
            let deriv = (-3.0 * l(0.0) + 4.0 * l(h) - l(2.0 * h)) / (2.0 * h);
            worst_deriv = worst_deriv.max((deriv + mean).abs());
            worst_norm = worst_norm.max((l(0.0) - 1.0).abs());
        }
    }
    let pass = worst_mix <= 1e-10 && worst_deriv <= 1e-4 && worst_norm <= 1e-14;
    Outcome::new(
        pass,
        format!("mixture {worst_mix:.1e}, Laplace derivative {worst_deriv:.1e}, normalisation {worst_norm:.1e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("quadratic preset solution", criterion_1),
        ("unconditional mean exit time by Monte Carlo", criterion_2),
        ("conditional exit laws by Monte Carlo", criterion_3),
        ("variational inequalities", criterion_4),
        ("representation equivalence", criterion_5),
        ("consistency of the posterior", criterion_6),
        ("figure regeneration", criterion_7),
        ("closed-form identities", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("criterion {} [{tag}] {name}: {}", i + 1, out.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
