//! Result documents and CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptation::{AdaptationClock, InelasticityReport, RatePoint};
use crate::optimizer::{OptimizationResult, RevenueModel, SweepGrid};
use crate::retention::{CurvatureClass, RetentionCurve};
use crate::simulator::{AbEstimate, CohortResult};
use crate::Result;

const SIG_DIGITS: usize = 9;

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form for
/// very small or large magnitudes.
pub fn fmt_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Comma-separated table with a fixed header.
pub struct Csv {
    buf: String,
    columns: usize,
}

pub enum Cell {
    Real(f64),
    Int(u64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            buf: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width does not match header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match *c {
                Cell::Real(v) => self.buf.push_str(&fmt_g(v)),
                Cell::Int(v) => write!(self.buf, "{v}").unwrap(),
            }
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("result types serialize") + "\n"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyReport {
    pub curve: RetentionCurve,
    pub classification: CurvatureClass,
    pub evidence: f64,
}

/// `result.json` of `optimize` and of chained estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeReport {
    /// Seed of the estimation run the curve came from, if any.
    pub seed: Option<u64>,
    pub curve: RetentionCurve,
    pub revenue: RevenueModel,
    pub grid: SweepGrid,
    pub z_max: u32,
    pub classification: Option<CurvatureClass>,
    pub result: OptimizationResult,
    pub warnings: Vec<String>,
}

/// `cohort_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortReport {
    pub seed: u64,
    pub final_fraction: f64,
    /// Product of the per-increase retention probabilities.
    pub expected_final_fraction: f64,
    pub cohort: CohortResult,
}

/// `rate_sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepReport {
    pub total: f64,
    pub clock: AdaptationClock,
    pub inelasticity: InelasticityReport,
    pub points: Vec<RatePoint>,
}

pub fn trace_csv(res: &OptimizationResult) -> String {
    let mut csv = Csv::new(&["x", "z_star", "A", "pi"]);
    for t in &res.sweep_trace {
        csv.row(vec![t.x.into(), t.z_star.into(), t.total.into(), t.pi.into()]);
    }
    csv.into_string()
}

pub fn cohort_csv(res: &CohortResult, expected: &[f64]) -> String {
    let mut csv = Csv::new(&[
        "period",
        "increment",
        "level",
        "survivors",
        "fraction",
        "ci_lo",
        "ci_hi",
        "expected",
        "revenue",
    ]);
    let mut level = 0.0;
    for (t, &survivors) in res.survivors_per_period.iter().enumerate() {
        let inc = if t == 0 { 0.0 } else { res.increments[t - 1] };
        level += inc;
        csv.row(vec![
            t.into(),
            inc.into(),
            level.into(),
            survivors.into(),
            res.survival_fraction[t].into(),
            res.ci_95[t].lo.into(),
            res.ci_95[t].hi.into(),
            expected[t].into(),
            res.realized_revenue[t].into(),
        ]);
    }
    csv.into_string()
}

pub fn arms_csv(est: &AbEstimate) -> Result<String> {
    let mut csv = Csv::new(&["x", "n", "stayed", "p_hat", "ci_lo", "ci_hi", "fitted"]);
    for (k, &x) in est.x_samples.iter().enumerate() {
        csv.row(vec![
            x.into(),
            est.n_per_arm.into(),
            est.stayed[k].into(),
            est.p_hat[k].into(),
            est.ci_95[k].lo.into(),
            est.ci_95[k].hi.into(),
            est.fitted.eval(x)?.into(),
        ]);
    }
    Ok(csv.into_string())
}

pub fn rate_csv(points: &[RatePoint]) -> String {
    let mut csv = Csv::new(&["rate", "x", "survival"]);
    for p in points {
        csv.row(vec![p.rate.into(), p.x.into(), p.survival.into()]);
    }
    csv.into_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(0.195), "0.195");
        assert_eq!(fmt_g(26.0), "26");
        assert_eq!(fmt_g(5.07), "5.07");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g(123456789.0), "123456789");
        assert_eq!(fmt_g(1234567890.0), "1.23456789e9");
        assert_eq!(fmt_g(1.5e-7), "1.5e-7");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(0.99999999999), "1");
        assert_eq!(fmt_g(f64::INFINITY), "inf");
    }

    #[test]
    fn nine_digits_round_trip_within_tolerance() {
        for v in [0.123456789123, 5.2071234567, 3.3e-12, 987654.321987] {
            let back: f64 = fmt_g(v).parse().unwrap();
            assert!((back - v).abs() <= 5e-9 * v.abs(), "{v} -> {back}");
        }
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(vec![1u64.into(), 0.5.into()]);
        assert_eq!(c.into_string(), "a,b\n1,0.5\n");
    }
}
