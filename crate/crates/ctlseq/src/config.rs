//! INI-style run configuration.
//!
//! A file holds `[section]` headers followed by `key = value` lines; `#` and
//! `;` start comments. Recognised sections are `problem`, `simulate`,
//! `stats` and `output`; unknown sections and keys are rejected so that
//! typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctlseq_core::simulate::{PiScheme, DEFAULT_DT};
use ctlseq_core::{
    ControlSet, CostModel, PenaltyKind, PenaltyModel, Phi, Piece, Regime, Representation, Solution, ThetaMode,
};

use crate::error::CliError;

const PROBLEM_KEYS: &[&str] = &["penalty", "phi", "a", "b", "c", "coef", "exponent", "table", "control"];
const SIMULATE_KEYS: &[&str] = &[
    "pi",
    "delta",
    "u",
    "paths",
    "dt",
    "t_max",
    "theta",
    "representation",
    "scheme",
    "bridge",
    "seed",
    "alphas",
];
const STATS_KEYS: &[&str] = &["pi", "delta", "u", "alphas", "sweep", "values", "density_t_max", "density_points"];
const OUTPUT_KEYS: &[&str] = &["dir", "format"];

pub const DEFAULT_PATHS: u64 = 10_000;
pub const DEFAULT_ALPHAS: &[f64] = &[0.0, 0.5, 1.0, 2.0];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn parse_sections(text: &str) -> Result<Vec<Section>, CliError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::config(line, "unterminated section header"))?
                .trim()
                .to_ascii_lowercase();
            if !["problem", "simulate", "stats", "output"].contains(&name.as_str()) {
                return Err(CliError::config(line, format!("unknown section [{name}]")));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(CliError::config(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| CliError::config(line, format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        let section = sections
            .last_mut()
            .ok_or_else(|| CliError::config(line, "key outside of any section"))?;
        let allowed = match section.name.as_str() {
            "problem" => PROBLEM_KEYS,
            "simulate" => SIMULATE_KEYS,
            "stats" => STATS_KEYS,
            _ => OUTPUT_KEYS,
        };
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::config(line, format!("unknown key `{key}` in [{}]", section.name)));
        }
        if value.is_empty() {
            return Err(CliError::config(line, format!("empty value for `{key}`")));
        }
        if section.entries.contains_key(&key) {
            return Err(CliError::config(line, format!("duplicate key `{key}`")));
        }
        section.entries.insert(key, Entry { value, line });
    }
    Ok(sections)
}

impl Section {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::config(self.line, format!("missing key `{key}` in [{}]", self.name))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|e| {
                e.value
                    .parse::<T>()
                    .map_err(|_| CliError::config(e.line, format!("cannot parse `{key}` from `{}`", e.value)))
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.parse(key)?.ok_or_else(|| self.missing(key))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|s| parse_real(s.trim()).map_err(|msg| CliError::config(e.line, msg)))
                    .collect()
            })
            .transpose()
    }

    fn line_of(&self, key: &str) -> usize {
        self.raw(key).map_or(self.line, |e| e.line)
    }

    fn check(&self, key: &str, ok: bool, msg: &str) -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            Err(CliError::config(self.line_of(key), format!("`{key}`: {msg}")))
        }
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| format!("not a number: `{s}`")),
    }
}

/// Parses a control set: pieces separated by `|`, each one of `nonzero`,
/// `positive`, `negative`, a single number or an interval such as `(0, 2]`.
pub fn parse_control_set(s: &str) -> Result<ControlSet, String> {
    let mut pieces = Vec::new();
    for part in s.split('|').map(str::trim) {
        match part.to_ascii_lowercase().as_str() {
            "nonzero" | "reals" => pieces.extend_from_slice(ControlSet::nonzero_reals().pieces()),
            "positive" => pieces.extend_from_slice(ControlSet::positive().pieces()),
            "negative" => pieces.push(Piece::Interval {
                lo: f64::NEG_INFINITY,
                hi: 0.0,
                lo_closed: false,
                hi_closed: false,
            }),
            _ => {
                let first = part.chars().next().unwrap_or(' ');
                if first == '(' || first == '[' {
                    let last = part.chars().last().unwrap_or(' ');
                    if last != ')' && last != ']' {
                        return Err(format!("unterminated interval `{part}`"));
                    }
                    let inner = &part[1..part.len() - 1];
                    let (lo, hi) = inner
                        .split_once(',')
                        .ok_or_else(|| format!("interval `{part}` needs two endpoints"))?;
                    pieces.push(Piece::Interval {
                        lo: parse_real(lo.trim())?,
                        hi: parse_real(hi.trim())?,
                        lo_closed: first == '[',
                        hi_closed: last == ']',
                    });
                } else {
                    pieces.push(Piece::Point(parse_real(part)?));
                }
            }
        }
    }
    ControlSet::new(pieces).map_err(|e| e.to_string())
}

fn parse_table(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|pair| {
            let (u, v) = pair
                .split_once(':')
                .ok_or_else(|| format!("table entry `{}` must be `u:phi`", pair.trim()))?;
            Ok((parse_real(u.trim())?, parse_real(v.trim())?))
        })
        .collect()
}

/// A boundary or control given explicitly or taken from the solved problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Optimal,
    Value(f64),
}

impl Param {
    fn read(section: &Section, key: &str) -> Result<Self, CliError> {
        let e = section.raw(key).ok_or_else(|| section.missing(key))?;
        if e.value.eq_ignore_ascii_case("optimal") {
            return Ok(Self::Optimal);
        }
        parse_real(&e.value)
            .map(Self::Value)
            .map_err(|msg| CliError::config(e.line, msg))
    }
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub penalty: PenaltyKind,
    pub phi: Phi,
    pub c: f64,
    pub control: ControlSet,
}

impl ProblemConfig {
    fn from_section(s: &Section) -> Result<Self, CliError> {
        let penalty = match s.raw("penalty").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("classic") => PenaltyKind::Classic,
            Some("cross_entropy") | Some("ce") => PenaltyKind::CrossEntropy,
            Some("l2") => PenaltyKind::L2,
            Some(other) => return Err(CliError::config(s.line_of("penalty"), format!("unknown penalty `{other}`"))),
        };
        let phi = match s.raw("phi").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("quadratic") => Phi::Quadratic {
                a: s.require("a")?,
                b: s.parse("b")?.unwrap_or(0.0),
            },
            Some("power") => Phi::Power {
                coef: s.require("coef")?,
                exponent: s.require("exponent")?,
            },
            Some("table") => {
                let e = s.raw("table").ok_or_else(|| s.missing("table"))?;
                Phi::Table(parse_table(&e.value).map_err(|m| CliError::config(e.line, m))?)
            }
            Some(other) => return Err(CliError::config(s.line_of("phi"), format!("unknown phi `{other}`"))),
        };
        let c: f64 = s.require("c")?;
        s.check("c", c > 0.0 && c.is_finite(), "temporal cost must be positive")?;
        let control = match s.raw("control") {
            None => ControlSet::nonzero_reals(),
            Some(e) => parse_control_set(&e.value).map_err(|m| CliError::config(e.line, m))?,
        };
        let cfg = Self {
            penalty,
            phi,
            c,
            control,
        };
        cfg.cost().map_err(|e| CliError::config(s.line, e.to_string()))?;
        Ok(cfg)
    }

    pub fn penalty_model(&self) -> PenaltyModel {
        match self.penalty {
            PenaltyKind::CrossEntropy => PenaltyModel::cross_entropy(),
            PenaltyKind::L2 => PenaltyModel::l2(),
            _ => PenaltyModel::classic(),
        }
    }

    pub fn cost(&self) -> ctlseq_core::Result<CostModel> {
        CostModel::new(self.phi.clone(), self.c)
    }

    pub fn solve(&self) -> Result<Solution, CliError> {
        Ok(ctlseq_core::solver::solve(&self.penalty_model(), &self.cost()?, &self.control)?)
    }

    /// The same problem with quadratic running cost `a·u² + b·u` and
    /// temporal cost `c`.
    pub fn with_quadratic(&self, a: f64, b: f64, c: f64) -> Self {
        Self {
            phi: Phi::Quadratic { a, b },
            c,
            ..self.clone()
        }
    }

    /// `(a, b, c)` when the running cost is quadratic.
    pub fn quadratic(&self) -> Option<(f64, f64, f64)> {
        match self.phi {
            Phi::Quadratic { a, b } => Some((a, b, self.c)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub pi: f64,
    pub delta: Param,
    pub u: Param,
    pub paths: u64,
    pub dt: f64,
    pub t_max: Option<f64>,
    pub theta: ThetaMode,
    pub representation: Representation,
    pub scheme: PiScheme,
    pub bridge: bool,
    pub seed: Option<u64>,
    pub alphas: Vec<f64>,
}

fn read_alphas(s: &Section) -> Result<Vec<f64>, CliError> {
    let alphas = s.list("alphas")?.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    s.check(
        "alphas",
        alphas.iter().all(|a| *a >= 0.0 && a.is_finite()),
        "Laplace arguments must be nonnegative",
    )?;
    Ok(alphas)
}

fn read_prior(s: &Section) -> Result<f64, CliError> {
    let pi: f64 = s.require("pi")?;
    s.check("pi", pi > 0.0 && pi < 1.0, "prior must lie in (0, 1)")?;
    Ok(pi)
}

fn check_params(s: &Section, delta: Param, u: Param) -> Result<(), CliError> {
    if let Param::Value(d) = delta {
        s.check("delta", (0.0..0.5).contains(&d), "boundary must lie in [0, 0.5)")?;
    }
    if let Param::Value(u) = u {
        s.check("u", u != 0.0 && u.is_finite(), "control must be a nonzero real")?;
    }
    Ok(())
}

impl SimulateConfig {
    fn from_section(s: &Section) -> Result<Self, CliError> {
        let pi = read_prior(s)?;
        let delta = Param::read(s, "delta")?;
        let u = Param::read(s, "u")?;
        check_params(s, delta, u)?;
        let theta = match s.raw("theta").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("bernoulli") => ThetaMode::Bernoulli,
            Some("0") => ThetaMode::Fixed0,
            Some("1") => ThetaMode::Fixed1,
            Some(other) => return Err(CliError::config(s.line_of("theta"), format!("theta must be bernoulli, 0 or 1, not `{other}`"))),
        };
        let representation = match s.raw("representation").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("logit_exact") => Representation::LogitExact,
            Some("strong_x") => Representation::StrongX,
            Some("pi_euler") => Representation::PiEuler,
            Some(other) => {
                return Err(CliError::config(s.line_of("representation"), format!("unknown representation `{other}`")))
            }
        };
        let scheme = match s.raw("scheme").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("milstein") => PiScheme::Milstein,
            Some("euler") | Some("euler_maruyama") => PiScheme::EulerMaruyama,
            Some(other) => return Err(CliError::config(s.line_of("scheme"), format!("unknown scheme `{other}`"))),
        };
        let paths = s.parse("paths")?.unwrap_or(DEFAULT_PATHS);
        s.check("paths", paths > 0, "path count must be positive")?;
        let dt = s.parse("dt")?.unwrap_or(DEFAULT_DT);
        s.check("dt", dt > 0.0 && dt <= ctlseq_core::simulate::MAX_DT, "time step must lie in (0, 1e-2]")?;
        let t_max: Option<f64> = s.parse("t_max")?;
        if let Some(t) = t_max {
            s.check("t_max", t > 0.0, "horizon must be positive")?;
        }
        Ok(Self {
            pi,
            delta,
            u,
            paths,
            dt,
            t_max,
            theta,
            representation,
            scheme,
            bridge: s.parse("bridge")?.unwrap_or(true),
            seed: s.parse("seed")?,
            alphas: read_alphas(s)?,
        })
    }
}

/// The quantity varied by a characteristics sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Pi,
    A,
    B,
    C,
}

#[derive(Debug, Clone)]
pub struct StatsConfig {
    pub pi: f64,
    pub delta: Param,
    pub u: Param,
    pub alphas: Vec<f64>,
    pub sweep: Sweep,
    pub values: Vec<f64>,
    pub density_t_max: Option<f64>,
    pub density_points: usize,
}

impl StatsConfig {
    fn from_section(s: &Section) -> Result<Self, CliError> {
        let pi = read_prior(s)?;
        let delta = Param::read(s, "delta")?;
        let u = Param::read(s, "u")?;
        check_params(s, delta, u)?;
        let sweep = match s.raw("sweep").map(|e| e.value.to_ascii_lowercase()).as_deref() {
            None | Some("pi") => Sweep::Pi,
            Some("a") => Sweep::A,
            Some("b") => Sweep::B,
            Some("c") => Sweep::C,
            Some(other) => return Err(CliError::config(s.line_of("sweep"), format!("unknown sweep `{other}`"))),
        };
        let values = s.list("values")?.unwrap_or_else(|| vec![pi]);
        if sweep != Sweep::Pi {
            s.check(
                "sweep",
                delta == Param::Optimal && u == Param::Optimal,
                "cost sweeps need `delta = optimal` and `u = optimal`",
            )?;
        } else {
            s.check("values", values.iter().all(|p| *p > 0.0 && *p < 1.0), "priors must lie in (0, 1)")?;
        }
        let density_t_max: Option<f64> = s.parse("density_t_max")?;
        if let Some(t) = density_t_max {
            s.check("density_t_max", t > 0.0 && t.is_finite(), "must be positive")?;
        }
        let density_points = s.parse("density_points")?.unwrap_or(200);
        s.check("density_points", density_points > 0, "must be positive")?;
        Ok(Self {
            pi,
            delta,
            u,
            alphas: read_alphas(s)?,
            sweep,
            values,
            density_t_max,
            density_points,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("format must be csv or json, not `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub problem: Option<ProblemConfig>,
    pub simulate: Option<SimulateConfig>,
    pub stats: Option<StatsConfig>,
    pub output: OutputConfig,
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for s in parse_sections(text)? {
            match s.name.as_str() {
                "problem" => cfg.problem = Some(ProblemConfig::from_section(&s)?),
                "simulate" => cfg.simulate = Some(SimulateConfig::from_section(&s)?),
                "stats" => cfg.stats = Some(StatsConfig::from_section(&s)?),
                _ => {
                    if let Some(dir) = s.raw("dir") {
                        cfg.output.dir = PathBuf::from(&dir.value);
                    }
                    if let Some(e) = s.raw("format") {
                        cfg.output.format = e.value.parse().map_err(|m| CliError::config(e.line, m))?;
                    }
                }
            }
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        text.parse()
    }

    pub fn problem(&self) -> Result<&ProblemConfig, CliError> {
        self.problem.as_ref().ok_or_else(|| CliError::Config {
            line: None,
            msg: "missing [problem] section".into(),
        })
    }
}

/// Resolves `(delta, u)` against the solved problem when either is
/// `optimal`.
pub fn resolve_boundary(cfg: &RunConfig, delta: Param, u: Param) -> Result<(f64, f64), CliError> {
    if let (Param::Value(d), Param::Value(u)) = (delta, u) {
        return Ok((d, u));
    }
    let sol = cfg.problem()?.solve()?;
    optimal_pair(&sol, delta, u)
}

pub(crate) fn optimal_pair(sol: &Solution, delta: Param, u: Param) -> Result<(f64, f64), CliError> {
    let need = |what: &str| CliError::Config {
        line: None,
        msg: format!("`{what} = optimal` needs a solution with M > 0 and an attained control"),
    };
    let d = match delta {
        Param::Value(d) => d,
        Param::Optimal if sol.regime() == Regime::PositiveM => sol.a_star(),
        Param::Optimal => return Err(need("delta")),
    };
    let u = match u {
        Param::Value(u) => u,
        Param::Optimal => match (sol.regime(), sol.u_star()) {
            (Regime::PositiveM, Some(u)) => u,
            _ => return Err(need("u")),
        },
    };
    Ok((d, u))
}
