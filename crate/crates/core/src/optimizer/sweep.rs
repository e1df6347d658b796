use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{revenue_pi, z_star, RevenueModel, Schedule};
use crate::retention::{classify, CurvatureKind, RetentionCurve};
use crate::search::golden_section_max;
use crate::simulator::rng::CounterRng;
use crate::{Error, Result};

pub const DEFAULT_GRID_STEP: f64 = 0.001;
/// Upper end of the default grid: where `p` drops below this.
const NEGLIGIBLE_RETENTION: f64 = 1e-6;
/// Hard cap on the default grid's upper end, for heavy-tailed curves.
const DEFAULT_GRID_CEILING: f64 = 1000.0;
const ONE_STEP_REL_TOL: f64 = 1e-6;
const AUDIT_PROBES: usize = 200;
const AUDIT_Z_MAX: u32 = 50;
const AUDIT_SEED: u64 = 0x5eed_0fd0_4a11;
const AUDIT_RTOL: f64 = 1e-9;

/// Evenly spaced step sizes `min, min + step, ..., <= max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl SweepGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let g = SweepGrid { min, max, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min < self.max && self.max.is_finite()) {
            return Err(Error::param(format!(
                "grid needs 0 < min < max, got min = {}, max = {}",
                self.min, self.max
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param(format!("grid step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    /// Default grid for `curve`: from `step` up to the smaller of the domain
    /// end and the first `x` with `p(x) < 1e-6`.
    pub fn default_for(curve: &RetentionCurve, step: f64) -> Result<Self> {
        let upper = curve
            .domain_max()
            .min(negligible_point(curve))
            .min(DEFAULT_GRID_CEILING);
        Self::new(step, upper, step)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step * (1.0 + 1e-12)).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Smallest `x` with `p(x) < 1e-6`, or the grid ceiling if there is none.
fn negligible_point(curve: &RetentionCurve) -> f64 {
    let below = |x: f64| curve.eval_unchecked(x) < NEGLIGIBLE_RETENTION;
    let ceiling = curve.domain_max().min(DEFAULT_GRID_CEILING);
    if !below(ceiling) {
        return ceiling;
    }
    let (mut lo, mut hi) = (0.0, ceiling);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `Pi(x, z*(x))` at one grid point. Columns of the trace CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracePoint {
    pub x: f64,
    pub z_star: u32,
    pub total: f64,
    pub pi: f64,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationResult {
    pub best: Schedule,
    pub value: f64,
    pub sweep_trace: Vec<TracePoint>,
    pub one_step_shortcut_used: bool,
    /// Grid points whose `z*` hit `z_max`.
    pub capped_points: usize,
    /// The reported optimum itself hit `z_max`.
    pub best_capped: bool,
    /// Present when the one-step shortcut was taken.
    pub one_step_audit: Option<DominanceAudit>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("step-size grid is empty"));
    }
    if grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::param("step-size grid must contain positive finite values"));
    }
    Ok(())
}

/// Index of the first maximum; earlier entries win ties.
fn first_argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Maximizes `Pi(x, z*(x))` over the grid.
///
/// Grid points are evaluated in parallel and reduced in grid order, so the
/// result is identical to a sequential run. Ties go to the smaller `x`.
pub fn optimize_sweep(
    curve: &RetentionCurve,
    rev: &RevenueModel,
    grid: &[f64],
    z_max: u32,
) -> Result<OptimizationResult> {
    check_grid(grid)?;
    let trace = grid
        .par_iter()
        .map(|&x| {
            let zs = z_star(curve, rev, x, z_max)?;
            let sched = Schedule::new(x, zs.z)?;
            Ok(TracePoint {
                x,
                z_star: zs.z,
                total: sched.total,
                pi: revenue_pi(curve, rev, &sched)?,
                capped: zs.capped,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best_idx = first_argmax(trace.iter().map(|t| t.pi)).expect("non-empty grid");
    let best = trace[best_idx];
    Ok(OptimizationResult {
        best: Schedule::new(best.x, best.z_star)?,
        value: best.pi,
        capped_points: trace.iter().filter(|t| t.capped).count(),
        best_capped: best.capped,
        sweep_trace: trace,
        one_step_shortcut_used: false,
        one_step_audit: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominanceAudit {
    pub probes: usize,
    /// Largest `Pi(x, z) / value` over the probes.
    pub worst_ratio: f64,
    /// Probes exceeding `value` by more than `1e-9` relative.
    pub violations: usize,
}

impl DominanceAudit {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `value >= Pi(x, z)` on random probes with `z` in `1..=z_hi` and
/// `x` uniform on `(0, x_max / z]`, so every probe's total stays within the
/// range the one-step search covered.
pub fn dominance_audit(
    curve: &RetentionCurve,
    rev: &RevenueModel,
    value: f64,
    x_max: f64,
    probes: usize,
    z_hi: u32,
    seed: u64,
) -> Result<DominanceAudit> {
    let rng = CounterRng::new(seed);
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut violations = 0;
    for k in 0..probes as u64 {
        let z = 1 + (rng.uniform(k, 0, 0) * z_hi as f64) as u32;
        let z = z.min(z_hi);
        // 1 - u lies in (0, 1], so x > 0.
        let x = x_max / z as f64 * (1.0 - rng.uniform(k, 0, 1));
        let pi = revenue_pi(curve, rev, &Schedule::new(x, z)?)?;
        worst_ratio = worst_ratio.max(pi / value);
        if pi > value * (1.0 + AUDIT_RTOL) {
            violations += 1;
        }
    }
    Ok(DominanceAudit {
        probes,
        worst_ratio,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneStepResult {
    pub x: f64,
    pub value: f64,
    pub audit: DominanceAudit,
}

/// For log-convex `p` a single increase is optimal: maximizes `p(x) r(x)`
/// on the grid, refines inside the bracketing cells by golden-section
/// search, and audits the result against random multi-step schedules.
pub fn optimize_one_step(curve: &RetentionCurve, rev: &RevenueModel, grid: &[f64]) -> Result<OneStepResult> {
    check_grid(grid)?;
    let class = classify(curve)?;
    if class.kind != CurvatureKind::LogConvex {
        return Err(Error::Classification(format!(
            "one-step optimization needs a log-convex curve, got {}",
            class.kind
        )));
    }
    let objective = |x: f64| curve.eval(x).map(|p| p * rev.r(x));
    let values = grid.iter().map(|&x| objective(x)).collect::<Result<Vec<_>>>()?;
    let j = first_argmax(values.iter().copied()).expect("non-empty grid");

    let mut x_star = grid[j];
    if j > 0 && j + 1 < grid.len() {
        let (x, v) = golden_section_max(
            |x| objective(x).unwrap_or(f64::NEG_INFINITY),
            grid[j - 1],
            grid[j + 1],
            ONE_STEP_REL_TOL,
        );
        if v > values[j] {
            x_star = x;
        }
    }
    let value = revenue_pi(curve, rev, &Schedule::new(x_star, 1)?)?;
    let x_max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let audit = dominance_audit(curve, rev, value, x_max, AUDIT_PROBES, AUDIT_Z_MAX, AUDIT_SEED)?;
    Ok(OneStepResult {
        x: x_star,
        value,
        audit,
    })
}

/// Picks the one-step shortcut for log-convex curves and the full sweep
/// otherwise.
pub fn optimize(curve: &RetentionCurve, rev: &RevenueModel, grid: &[f64], z_max: u32) -> Result<OptimizationResult> {
    let log_convex = matches!(classify(curve), Ok(c) if c.kind == CurvatureKind::LogConvex);
    if !log_convex {
        return optimize_sweep(curve, rev, grid, z_max);
    }
    let one = optimize_one_step(curve, rev, grid)?;
    let trace = grid
        .iter()
        .map(|&x| {
            Ok(TracePoint {
                x,
                z_star: 1,
                total: x,
                pi: revenue_pi(curve, rev, &Schedule::new(x, 1)?)?,
                capped: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizationResult {
        best: Schedule::new(one.x, 1)?,
        value: one.value,
        sweep_trace: trace,
        one_step_shortcut_used: true,
        capped_points: 0,
        best_capped: false,
        one_step_audit: Some(one.audit),
    })
}
