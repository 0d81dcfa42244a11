//! The four user commands. Each writes its files into the output directory
//! and a human-readable summary into `out`.

use std::fs;
use std::io::Write;
use std::path::Path;

use ctlseq_core::simulate::{decision_record, default_t_max, expected_tau, laplace_estimates};
use ctlseq_core::stats::{characteristics_at, conditional_mean_tau, decision_probabilities, expected_exit_time, laplace_tau};
use ctlseq_core::{DensitySeries, ExtReal, McEstimate, PolicyKind, SimConfig, ThetaMode};
use serde::Serialize;

use crate::config::{optimal_pair, resolve_boundary, Format, Param, RunConfig, Sweep};
use crate::error::CliError;
use crate::output::{fmt_f64, regime_name, write_characteristics, write_tau_samples, SolutionJson};
use crate::runner::run_paths_parallel;

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<std::path::PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub dt: Option<f64>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if o.seed.is_none() && o.paths.is_none() && o.dt.is_none() {
            return Ok(());
        }
        let sim = self.simulate.as_mut().ok_or_else(missing_simulate)?;
        if let Some(seed) = o.seed {
            sim.seed = Some(seed);
        }
        if let Some(n) = o.paths {
            if n == 0 {
                return Err(flag_error("--paths must be positive"));
            }
            sim.paths = n;
        }
        if let Some(dt) = o.dt {
            if !(dt > 0.0 && dt <= ctlseq_core::simulate::MAX_DT) {
                return Err(flag_error("--dt must lie in (0, 1e-2]"));
            }
            sim.dt = dt;
        }
        Ok(())
    }
}

fn flag_error(msg: &str) -> CliError {
    CliError::Config {
        line: None,
        msg: msg.into(),
    }
}

fn missing_simulate() -> CliError {
    flag_error("missing [simulate] section")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = cfg.output.dir.as_path();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir)
}

fn put(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { put($out, format_args!($($arg)*)) };
}

pub fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sol = cfg.problem()?.solve()?;
    let dir = out_dir(cfg)?;
    let js = SolutionJson::from_solution(&sol)?;
    js.write(&dir.join("solution.json"))?;

    say!(out, "regime  {}", regime_name(sol.regime()))?;
    say!(out, "M       {}", sol.m())?;
    say!(out, "u*      {}", sol.u_star().map_or("none (not attained)".into(), fmt_f64))?;
    say!(out, "A*      {}", sol.a_star())?;
    match sol.policy().kind {
        PolicyKind::NeverStop => say!(out, "value −∞; never stop")?,
        PolicyKind::StopImmediately => say!(out, "policy  stop immediately")?,
        PolicyKind::ConstantControlAndThreshold => {
            say!(out, "policy  observe with u* until the posterior leaves ({}, {})", sol.a_star(), 1.0 - sol.a_star())?
        }
        PolicyKind::EpsilonOptimalFamily => {
            say!(out, "policy  infimum not attained; ε-optimal family of constant controls")?;
            if let Some(steps) = &sol.policy().epsilon_recipe {
                for s in steps.iter().take(5) {
                    say!(out, "  n={:<3} u={:<12} delta={:<12} cost={}", s.index, s.u, s.delta, s.cost)?;
                }
            }
        }
    }
    say!(out, "V sampled on {} points:", js.value_samples.len())?;
    say!(out, "{:>12}  {:>22}", "pi", "V")?;
    for (pi, v) in &js.value_samples {
        say!(out, "{pi:>12.8}  {:>22}", ExtReal::from(*v))?;
    }
    if cfg.output.format == Format::Csv {
        let path = dir.join("value_samples.csv");
        let mut w = crate::output::csv_writer(&path)?;
        w.write_record(["pi", "value"])?;
        for (pi, v) in &js.value_samples {
            w.write_record([fmt_f64(*pi), fmt_f64(ExtReal::from(*v).to_f64())])?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

/// One line of a Monte Carlo summary: estimate, standard error and the
/// closed form when one exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
    pub closed_form: Option<f64>,
}

impl McRow {
    fn new(quantity: impl Into<String>, est: McEstimate, closed_form: Option<f64>) -> Self {
        Self {
            quantity: quantity.into(),
            estimate: est.mean,
            std_error: est.std_error,
            n: est.n,
            closed_form,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub seed: u64,
    pub pi: f64,
    pub delta: f64,
    pub u: f64,
    pub dt: f64,
    pub t_max: f64,
    pub paths: u64,
    pub censored: u64,
    pub rows: Vec<McRow>,
}

fn mc_rows(outcomes: &[ctlseq_core::PathOutcome], sim: &SimConfig, alphas: &[f64]) -> Vec<McRow> {
    let (p, a, u) = (sim.p, sim.delta, sim.u);
    let interior = a > 0.0 && p > a && p < 1.0 - a;
    let closed = |f: &dyn Fn() -> ctlseq_core::Result<f64>| if interior { f().ok() } else { None };
    let all_closed = closed(&|| match sim.theta_mode {
        ThetaMode::Bernoulli => expected_exit_time(p, a, u),
        ThetaMode::Fixed1 => conditional_mean_tau(a, p, u).map(|m| m.0),
        ThetaMode::Fixed0 => conditional_mean_tau(a, p, u).map(|m| m.1),
    });
    let mut rows = vec![McRow::new("E[tau]", expected_tau(outcomes, None), all_closed)];
    let record = decision_record(outcomes);
    for theta in [1u8, 0] {
        if !outcomes.iter().any(|o| o.theta == theta) {
            continue;
        }
        let i = usize::from(theta == 0);
        rows.push(McRow::new(
            format!("E[tau|theta={theta}]"),
            expected_tau(outcomes, Some(theta)),
            closed(&|| conditional_mean_tau(a, p, u).map(|m| [m.0, m.1][i])),
        ));
        let est = if theta == 1 { record.p_upper_given_1 } else { record.p_upper_given_0 };
        rows.push(McRow::new(
            format!("P(upper|theta={theta})"),
            est,
            closed(&|| decision_probabilities(a, p).map(|d| [d.0, d.1][i])),
        ));
        for (alpha, est) in alphas.iter().zip(laplace_estimates(outcomes, Some(theta), alphas)) {
            rows.push(McRow::new(
                format!("Laplace(alpha={alpha})|theta={theta}"),
                est,
                closed(&|| laplace_tau(a, p, u, *alpha, theta)),
            ));
        }
    }
    rows
}

fn print_rows(out: &mut dyn Write, rows: &[McRow]) -> Result<(), CliError> {
    say!(out, "{:<28} {:>14} {:>12} {:>14}", "quantity", "estimate", "± SE", "closed form")?;
    for r in rows {
        let cf = r.closed_form.map_or("-".to_string(), |x| format!("{x:.6}"));
        say!(out, "{:<28} {:>14.6} {:>12.6} {:>14}", r.quantity, r.estimate, r.std_error, cf)?;
    }
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let s = cfg.simulate.as_ref().ok_or_else(missing_simulate)?;
    let seed = s
        .seed
        .ok_or_else(|| flag_error("randomized commands need an explicit seed (--seed or `seed` in [simulate])"))?;
    let (delta, u) = resolve_boundary(cfg, s.delta, s.u)?;
    let sim = SimConfig::builder(s.pi, u, delta, seed)
        .n_paths(s.paths)
        .dt(s.dt)
        .t_max(s.t_max.unwrap_or_else(|| default_t_max(s.pi, delta, u)))
        .theta_mode(s.theta)
        .representation(s.representation)
        .pi_scheme(s.scheme)
        .bridge_correction(s.bridge)
        .build()?;
    log::info!("simulating {} paths with dt = {}", sim.n_paths, sim.dt);
    let outcomes = run_paths_parallel(&sim)?;
    let rows = mc_rows(&outcomes, &sim, &s.alphas);
    let censored = outcomes.iter().filter(|o| o.exit_side == ctlseq_core::simulate::ExitSide::Censored).count() as u64;

    say!(out, "pi = {}, delta = {}, u = {}, dt = {}, paths = {}, seed = {}", sim.p, delta, u, sim.dt, sim.n_paths, seed)?;
    say!(out, "censored paths: {censored} (t_max = {})", sim.t_max)?;
    print_rows(out, &rows)?;

    let dir = out_dir(cfg)?;
    let summary = SimulateSummary {
        seed,
        pi: sim.p,
        delta,
        u,
        dt: sim.dt,
        t_max: sim.t_max,
        paths: sim.n_paths,
        censored,
        rows,
    };
    let path = dir.join("simulate_summary.json");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &summary)?;
    if cfg.output.format == Format::Csv {
        write_tau_samples(&dir.join("tau_samples.csv"), &outcomes)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct CharacteristicsJson {
    parameter: f64,
    type1: f64,
    type2: f64,
    power: f64,
    mean_tau_1: Option<f64>,
    mean_tau_0: Option<f64>,
}

pub fn cmd_stats(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let s = cfg.stats.as_ref().ok_or_else(|| flag_error("missing [stats] section"))?;
    let (delta, u) = resolve_boundary(cfg, s.delta, s.u)?;
    let p = s.pi;
    let tc = characteristics_at(delta, p, u)?;
    say!(out, "pi = {p}, A = {delta}, u = {u}")?;
    if tc.degenerate {
        say!(out, "prior outside the continuation region: decision without observation")?;
    }
    let interior = !tc.degenerate && delta > 0.0;
    say!(out, "{:<28} {:>14} {:>14}", "quantity", "theta=1", "theta=0")?;
    if interior {
        say!(out, "{:<28} {:>14.6}", "E[tau]", expected_exit_time(p, delta, u)?)?;
    }
    say!(out, "{:<28} {:>14.6} {:>14.6}", "E[tau|theta]", tc.mean_tau_1, tc.mean_tau_0)?;
    say!(out, "{:<28} {:>14.6} {:>14.6}", "P(upper|theta)", tc.p_upper_1, tc.p_upper_0)?;
    for &alpha in &s.alphas {
        let (l1, l0) = if interior {
            (laplace_tau(delta, p, u, alpha, 1)?, laplace_tau(delta, p, u, alpha, 0)?)
        } else {
            (1.0, 1.0)
        };
        say!(out, "{:<28} {:>14.6} {:>14.6}", format!("Laplace(alpha={alpha})"), l1, l0)?;
    }
    say!(out, "type I = {:.6}, type II = {:.6}, power = {:.6}", tc.type1, tc.type2, tc.power)?;

    let mut rows = Vec::new();
    for &x in &s.values {
        let point = match s.sweep {
            Sweep::Pi => characteristics_at(delta, x, u)?,
            sweep => {
                let problem = cfg.problem()?;
                let (a, b, c) = problem
                    .quadratic()
                    .ok_or_else(|| flag_error("cost sweeps need a quadratic running cost"))?;
                let (a, b, c) = match sweep {
                    Sweep::A => (x, b, c),
                    Sweep::B => (a, x, c),
                    _ => (a, b, x),
                };
                let sol = problem.with_quadratic(a, b, c).solve()?;
                let (d, u) = optimal_pair(&sol, Param::Optimal, Param::Optimal)?;
                characteristics_at(d, p, u)?
            }
        };
        rows.push((x, point));
    }

    let dir = out_dir(cfg)?;
    match cfg.output.format {
        Format::Csv => write_characteristics(&dir.join("characteristics.csv"), &rows)?,
        Format::Json => {
            let js: Vec<CharacteristicsJson> = rows
                .iter()
                .map(|(x, t)| CharacteristicsJson {
                    parameter: *x,
                    type1: t.type1,
                    type2: t.type2,
                    power: t.power,
                    mean_tau_1: Some(t.mean_tau_1).filter(|v| v.is_finite()),
                    mean_tau_0: Some(t.mean_tau_0).filter(|v| v.is_finite()),
                })
                .collect();
            let path = dir.join("characteristics.json");
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            serde_json::to_writer_pretty(std::io::BufWriter::new(file), &js)?;
        }
    }

    if let (Some(t_hi), true) = (s.density_t_max, interior) {
        let d1 = DensitySeries::new(delta, p, u, 1)?;
        let d0 = DensitySeries::new(delta, p, u, 0)?;
        let path = dir.join("density.csv");
        let mut w = crate::output::csv_writer(&path)?;
        w.write_record(["t", "density_1", "density_0"])?;
        for i in 1..=s.density_points {
            let t = t_hi * i as f64 / s.density_points as f64;
            w.write_record([fmt_f64(t), fmt_f64(d1.density(t)?), fmt_f64(d0.density(t)?)])?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn cmd_figures(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let default_problem;
    let problem = match &cfg.problem {
        Some(p) => p,
        None => {
            default_problem = "[problem]\na = 1\nb = 1\nc = 1\n".parse::<RunConfig>()?.problem.expect("preset section");
            &default_problem
        }
    };
    let dir = out_dir(cfg)?;
    crate::figures::write_figures(problem, dir)?;
    for name in ["fig1_boundaries.csv", "fig2_value.csv", "fig3_densities.csv", "fig3_errors.csv"] {
        say!(out, "wrote {}", dir.join(name).display())?;
    }
    Ok(())
}
