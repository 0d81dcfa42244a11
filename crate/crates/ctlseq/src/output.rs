//! Solution JSON and CSV emitters.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which
//! always uses `.` as the decimal point. `-∞` is written as the string
//! `"-inf"` in JSON and as `-inf` in CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ctlseq_core::simulate::ExitSide;
use ctlseq_core::{ExtReal, PathOutcome, Regime, Solution, TestCharacteristics};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Number of interior points at which `V` is sampled.
pub const VALUE_SAMPLES: usize = 512;

/// A JSON number, or the string `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonReal {
    Finite(f64),
    Text(NegInf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NegInf {
    #[serde(rename = "-inf")]
    NegInf,
}

impl From<ExtReal> for JsonReal {
    fn from(x: ExtReal) -> Self {
        match x {
            ExtReal::Finite(v) => Self::Finite(v),
            ExtReal::NegInfinity => Self::Text(NegInf::NegInf),
        }
    }
}

impl From<JsonReal> for ExtReal {
    fn from(x: JsonReal) -> Self {
        match x {
            JsonReal::Finite(v) => ExtReal::Finite(v),
            JsonReal::Text(_) => ExtReal::NegInfinity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub regime: String,
    #[serde(rename = "M")]
    pub m: JsonReal,
    pub u_star: Option<f64>,
    pub attained: bool,
    #[serde(rename = "A_star")]
    pub a_star: f64,
    pub value_samples: Vec<(f64, JsonReal)>,
}

pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::PositiveM => "PositiveM",
        Regime::ZeroM => "ZeroM",
        Regime::NegativeM => "NegativeM",
    }
}

/// The sample points `i/(n+1)`, `i = 1..=n`.
pub fn value_grid(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| i as f64 / (n + 1) as f64)
}

impl SolutionJson {
    pub fn from_solution(sol: &Solution) -> Result<Self, CliError> {
        let value_samples = value_grid(VALUE_SAMPLES)
            .map(|pi| Ok((pi, JsonReal::from(sol.value(pi)?))))
            .collect::<Result<_, CliError>>()?;
        Ok(Self {
            regime: regime_name(sol.regime()).into(),
            m: sol.m().into(),
            u_star: sol.u_star(),
            attained: sol.eta_solution().attained,
            a_star: sol.a_star(),
            value_samples,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Formats a float for CSV output.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn side_name(side: ExitSide) -> &'static str {
    match side {
        ExitSide::Lower => "lower",
        ExitSide::Upper => "upper",
        ExitSide::Censored => "censored",
    }
}

pub fn write_tau_samples(path: &Path, outcomes: &[PathOutcome]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["path_index", "theta", "tau", "exit_side"])?;
    for o in outcomes {
        w.write_record([o.path_index.to_string(), o.theta.to_string(), fmt_f64(o.tau), side_name(o.exit_side).into()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub const CHARACTERISTICS_HEADER: [&str; 6] = ["parameter", "type1", "type2", "power", "mean_tau_1", "mean_tau_0"];

pub fn characteristics_record(parameter: f64, tc: &TestCharacteristics) -> [String; 6] {
    [
        fmt_f64(parameter),
        fmt_f64(tc.type1),
        fmt_f64(tc.type2),
        fmt_f64(tc.power),
        fmt_f64(tc.mean_tau_1),
        fmt_f64(tc.mean_tau_0),
    ]
}

pub fn write_characteristics(path: &Path, rows: &[(f64, TestCharacteristics)]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(CHARACTERISTICS_HEADER)?;
    for (p, tc) in rows {
        w.write_record(characteristics_record(*p, tc))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctlseq_core::{ControlSet, CostModel, PenaltyModel};

    fn solve(a: f64, b: f64, c: f64) -> Solution {
        ctlseq_core::solver::solve(
            &PenaltyModel::classic(),
            &CostModel::quadratic(a, b, c).unwrap(),
            &ControlSet::nonzero_reals(),
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for sol in [solve(1.0, 1.0, 1.0), solve(0.1, 1.0, 1.0), solve(1.0, 2.0, 1.0)] {
            let js = SolutionJson::from_solution(&sol).unwrap();
            let path = dir.path().join("s.json");
            js.write(&path).unwrap();
            let back = SolutionJson::read(&path).unwrap();
            assert_eq!(back, js);
            for (pi, v) in &back.value_samples {
                assert_eq!(ExtReal::from(*v), sol.value(*pi).unwrap());
            }
        }
    }

    #[test]
    fn negative_regime_writes_text() {
        let js = SolutionJson::from_solution(&solve(0.1, 1.0, 1.0)).unwrap();
        let text = serde_json::to_string(&js).unwrap();
        assert!(text.contains(",\"-inf\"]"));
        assert!(matches!(js.m, JsonReal::Finite(m) if (m + 0.15).abs() < 1e-12));
        assert_eq!(js.regime, "NegativeM");
        assert_eq!(js.value_samples.len(), VALUE_SAMPLES);
    }

    #[test]
    fn float_format_is_plain() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-7), "0.0000001");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_opt(None), "");
    }
}
