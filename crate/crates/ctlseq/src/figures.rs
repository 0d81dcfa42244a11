//! Data behind the boundary, value-function and operating-characteristic
//! figures of the quadratic-cost example.

use std::path::Path;

use ctlseq_core::stats::characteristics;
use ctlseq_core::{DensitySeries, ExtReal, Regime, Solution, TestCharacteristics};

use crate::config::ProblemConfig;
use crate::error::CliError;
use crate::output::{characteristics_record, csv_writer, fmt_f64, fmt_opt, regime_name, CHARACTERISTICS_HEADER};

/// Offset below `b = 2√(ac)` of the near-critical rows.
pub const CRITICAL_GAP: f64 = 1e-6;
/// The large-`a` row of the value-function figure.
pub const LARGE_A: f64 = 1e4;
pub const DENSITY_PRIOR: f64 = 0.625;
pub const DENSITY_B: [f64; 5] = [1.28, 1.31, 1.34, 1.37, 1.4];
pub const ERROR_SWEEP_POINTS: usize = 40;
pub const DENSITY_STEP: f64 = 0.05;
pub const DENSITY_POINTS: usize = 400;
pub const VALUE_POINTS: usize = 199;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn solve_point(problem: &ProblemConfig, a: f64, b: f64, c: f64) -> Result<Solution, CliError> {
    problem.with_quadratic(a, b, c).solve().map_err(|e| match e {
        CliError::Config { msg, .. } => CliError::Numeric(ctlseq_core::Error::InvalidCost(msg)),
        other => other,
    })
}

fn numeric(e: ctlseq_core::Error) -> CliError {
    CliError::Numeric(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRow {
    pub sweep: &'static str,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub regime: Regime,
    pub m: ExtReal,
    pub u_star: Option<f64>,
    pub a_star: f64,
}

/// Three sweeps around `a = b = c = 1`: `a` and `c` over `[1/4, 5]`, `b`
/// over `[0, 2]` with an extra row just below the critical `b = 2`.
pub fn boundary_rows(problem: &ProblemConfig) -> Result<Vec<BoundaryRow>, CliError> {
    let mut b_grid = linspace(0.0, 2.0, 40);
    b_grid.insert(b_grid.len() - 1, 2.0 - CRITICAL_GAP);
    let sweeps: [(&'static str, Vec<f64>); 3] = [("a", linspace(0.25, 5.0, 19)), ("b", b_grid), ("c", linspace(0.25, 5.0, 19))];
    let mut rows = Vec::new();
    for (name, grid) in sweeps {
        for x in grid {
            let (a, b, c) = match name {
                "a" => (x, 1.0, 1.0),
                "b" => (1.0, x, 1.0),
                _ => (1.0, 1.0, x),
            };
            let sol = solve_point(problem, a, b, c)?;
            rows.push(BoundaryRow {
                sweep: name,
                a,
                b,
                c,
                regime: sol.regime(),
                m: sol.m(),
                u_star: sol.u_star(),
                a_star: sol.a_star(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueRow {
    pub sweep: &'static str,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub pi: f64,
    pub value: ExtReal,
    pub g: f64,
}

/// `V(π)` for `a ∈ {1/4, …, 5, 10⁴}` at `b = c = 1` and for
/// `b ∈ {0, …, 2}` at `a = c = 1`.
pub fn value_rows(problem: &ProblemConfig) -> Result<Vec<ValueRow>, CliError> {
    let curves: [(&'static str, Vec<f64>); 2] = [
        ("a", vec![0.25, 0.5, 1.0, 2.0, 5.0, LARGE_A]),
        ("b", vec![0.0, 0.5, 1.0, 1.5, 2.0 - CRITICAL_GAP, 2.0]),
    ];
    let penalty = problem.penalty_model();
    let mut rows = Vec::new();
    for (name, grid) in curves {
        for x in grid {
            let (a, b, c) = if name == "a" { (x, 1.0, 1.0) } else { (1.0, x, 1.0) };
            let sol = solve_point(problem, a, b, c)?;
            for i in 1..=VALUE_POINTS {
                let pi = i as f64 / (VALUE_POINTS + 1) as f64;
                rows.push(ValueRow {
                    sweep: name,
                    a,
                    b,
                    c,
                    pi,
                    value: sol.value(pi).map_err(numeric)?,
                    g: penalty.g(pi).map_err(numeric)?,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub b: f64,
    pub theta: u8,
    pub t: f64,
    pub density: f64,
}

/// Conditional exit-time densities at `π = 0.625`, `a = 1/2`, `c = 1` for
/// the five values of `b`. Values of `b` whose stopping region contains the
/// prior contribute no rows.
pub fn density_rows(problem: &ProblemConfig) -> Result<Vec<DensityRow>, CliError> {
    let mut rows = Vec::new();
    for b in DENSITY_B {
        let sol = solve_point(problem, 0.5, b, 1.0)?;
        let (a_star, u) = match (sol.regime(), sol.u_star()) {
            (Regime::PositiveM, Some(u)) if DENSITY_PRIOR > sol.a_star() && DENSITY_PRIOR < 1.0 - sol.a_star() => {
                (sol.a_star(), u)
            }
            _ => {
                log::warn!("b = {b}: prior {DENSITY_PRIOR} outside the continuation region, no density rows");
                continue;
            }
        };
        for theta in [1u8, 0] {
            let series = DensitySeries::new(a_star, DENSITY_PRIOR, u, theta).map_err(numeric)?;
            for i in 1..=DENSITY_POINTS {
                let t = i as f64 * DENSITY_STEP;
                rows.push(DensityRow {
                    b,
                    theta,
                    t,
                    density: series.density(t).map_err(numeric)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Error rates and mean durations at `π = 0.625`, `a = 1/2`, `c = 1` for
/// `b` from 1 to the critical `2√(ac) = √2`.
///
/// At the critical value `M = 0`, the boundaries sit at 0 and 1 and the
/// row holds the limits: both error rates 0, power 1 and infinite mean
/// durations.
pub fn error_rows(problem: &ProblemConfig) -> Result<Vec<(f64, TestCharacteristics)>, CliError> {
    let (a, c) = (0.5, 1.0);
    let critical = 2.0 * f64::sqrt(a * c);
    let mut rows = Vec::new();
    for b in linspace(1.0, critical, ERROR_SWEEP_POINTS) {
        let sol = solve_point(problem, a, b, c)?;
        let tc = match sol.regime() {
            Regime::PositiveM => characteristics(&sol, DENSITY_PRIOR).map_err(numeric)?,
            _ => TestCharacteristics {
                a: 0.0,
                pi: DENSITY_PRIOR,
                u: sol.u_star().unwrap_or(f64::NAN),
                p_upper_1: 1.0,
                p_upper_0: 0.0,
                mean_tau_1: f64::INFINITY,
                mean_tau_0: f64::INFINITY,
                type1: 0.0,
                type2: 0.0,
                power: 1.0,
                degenerate: false,
            },
        };
        rows.push((b, tc));
    }
    Ok(rows)
}

fn finish<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `fig1_boundaries.csv`, `fig2_value.csv`, `fig3_densities.csv` and
/// `fig3_errors.csv` into `dir`.
pub fn write_figures(problem: &ProblemConfig, dir: &Path) -> Result<(), CliError> {
    if problem.quadratic().is_none() {
        return Err(CliError::Config {
            line: None,
            msg: "figures need a quadratic running cost".into(),
        });
    }

    let path = dir.join("fig1_boundaries.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sweep", "a", "b", "c", "regime", "M", "u_star", "A_star", "upper"])?;
    for r in boundary_rows(problem)? {
        w.write_record([
            r.sweep.to_string(),
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_f64(r.c),
            regime_name(r.regime).into(),
            fmt_f64(r.m.to_f64()),
            fmt_opt(r.u_star),
            fmt_f64(r.a_star),
            fmt_f64(1.0 - r.a_star),
        ])?;
    }
    finish(w, &path)?;

    let path = dir.join("fig2_value.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sweep", "a", "b", "c", "pi", "value", "g"])?;
    for r in value_rows(problem)? {
        w.write_record([
            r.sweep.to_string(),
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_f64(r.c),
            fmt_f64(r.pi),
            fmt_f64(r.value.to_f64()),
            fmt_f64(r.g),
        ])?;
    }
    finish(w, &path)?;

    let path = dir.join("fig3_densities.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["b", "theta", "t", "density"])?;
    for r in density_rows(problem)? {
        w.write_record([fmt_f64(r.b), r.theta.to_string(), fmt_f64(r.t), fmt_f64(r.density)])?;
    }
    finish(w, &path)?;

    let path = dir.join("fig3_errors.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(CHARACTERISTICS_HEADER)?;
    for (b, tc) in error_rows(problem)? {
        w.write_record(characteristics_record(b, &tc))?;
    }
    finish(w, &path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn preset() -> ProblemConfig {
        let cfg: RunConfig = "[problem]\na = 1\nb = 1\nc = 1\n".parse().unwrap();
        cfg.problem.unwrap()
    }

    #[test]
    fn critical_rows() {
        let rows = boundary_rows(&preset()).unwrap();
        let near = rows.iter().find(|r| r.sweep == "b" && r.b == 2.0 - CRITICAL_GAP).unwrap();
        assert_eq!(near.regime, Regime::PositiveM);
        assert!(near.a_star <= 1e-3, "{}", near.a_star);
        let at = rows.iter().find(|r| r.sweep == "b" && r.b == 2.0).unwrap();
        assert_eq!(at.regime, Regime::ZeroM);
        assert_eq!(at.a_star, 0.0);
    }

    #[test]
    fn large_a_value_approaches_penalty() {
        let rows = value_rows(&preset()).unwrap();
        let dev = rows
            .iter()
            .filter(|r| r.sweep == "a" && r.a == LARGE_A)
            .map(|r| (r.g - r.value.to_f64()).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-3, "{dev}");
    }

    #[test]
    fn error_sweep_ends_in_limit() {
        let rows = error_rows(&preset()).unwrap();
        assert_eq!(rows.len(), ERROR_SWEEP_POINTS + 1);
        let (b, last) = rows.last().unwrap();
        assert_eq!(*b, 2.0 * f64::sqrt(0.5));
        assert_eq!((last.type1, last.type2, last.power), (0.0, 0.0, 1.0));
    }

    #[test]
    fn non_quadratic_is_config_error() {
        let cfg: RunConfig = "[problem]\nphi = power\ncoef = 1\nexponent = 3\nc = 1\n".parse().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = write_figures(&cfg.problem.unwrap(), dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
