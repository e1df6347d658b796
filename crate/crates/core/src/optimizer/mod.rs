//! Discounted revenue of equal-step schedules and the optimal number of
//! steps for a given step size.

mod sweep;

use serde::{Deserialize, Serialize};

pub use sweep::{
    dominance_audit, optimize, optimize_one_step, optimize_sweep, DominanceAudit, OneStepResult, OptimizationResult,
    SweepGrid, TracePoint, DEFAULT_GRID_STEP,
};

use crate::lasting::LastingEffect;
use crate::retention::RetentionCurve;
use crate::{Error, Result};

/// Revenue per user per period at inconvenience level `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RevenueFamily {
    /// `r(x) = x`
    #[default]
    Identity,
    /// `r(x) = x^a`
    Power { a: f64 },
    /// `r(x) = intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// `r(x) = ln(1 + x)`
    LogShifted,
}

impl RevenueFamily {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RevenueFamily::Identity => x,
            RevenueFamily::Power { a } => x.powf(a),
            RevenueFamily::Affine { intercept, slope } => intercept + slope * x,
            RevenueFamily::LogShifted => x.ln_1p(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RevenueFamily::Identity | RevenueFamily::LogShifted => true,
            RevenueFamily::Power { a } => a.is_finite() && a > 0.0,
            RevenueFamily::Affine { intercept, slope } => {
                intercept.is_finite() && intercept >= 0.0 && slope.is_finite() && slope > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid revenue family {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RevenueModelRepr {
    r: RevenueFamily,
    delta: f64,
}

/// Revenue function `r` and discount factor `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RevenueModelRepr", into = "RevenueModelRepr")]
pub struct RevenueModel {
    r: RevenueFamily,
    delta: f64,
}

impl TryFrom<RevenueModelRepr> for RevenueModel {
    type Error = Error;

    fn try_from(repr: RevenueModelRepr) -> Result<Self> {
        RevenueModel::new(repr.r, repr.delta)
    }
}

impl From<RevenueModel> for RevenueModelRepr {
    fn from(m: RevenueModel) -> Self {
        RevenueModelRepr { r: m.r, delta: m.delta }
    }
}

impl RevenueModel {
    /// Validates the parameters and `delta` in `(0, 1)`. Every admissible
    /// family is increasing and log-concave.
    pub fn new(r: RevenueFamily, delta: f64) -> Result<Self> {
        r.validate()?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(format!("discount factor must lie in (0, 1), got {delta}")));
        }
        Ok(RevenueModel { r, delta })
    }

    pub fn identity(delta: f64) -> Result<Self> {
        Self::new(RevenueFamily::Identity, delta)
    }

    pub fn family(&self) -> RevenueFamily {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r(&self, x: f64) -> f64 {
        self.r.eval(x)
    }
}

/// `z` equal increases of size `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub x: f64,
    pub z: u32,
    /// Total increase `x * z`.
    pub total: f64,
}

impl Schedule {
    pub fn new(x: f64, z: u32) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::param(format!("step size must be positive, got {x}")));
        }
        if z == 0 {
            return Err(Error::param("a schedule needs at least one increase"));
        }
        Ok(Schedule {
            x,
            z,
            total: x * z as f64,
        })
    }
}

/// Discounted revenue of `z` increases of size `x`:
/// `sum_{i<z} delta^{i-1} p^i r(x i) + delta^{z-1} / (1 - delta) p^z r(x z)`.
pub fn revenue_pi(curve: &RetentionCurve, rev: &RevenueModel, sched: &Schedule) -> Result<f64> {
    if sched.z == 0 {
        return Err(Error::param("a schedule needs at least one increase"));
    }
    let p = curve.eval(sched.x)?;
    let delta = rev.delta;
    let mut sum = 0.0;
    let mut reach = 1.0;
    let mut discount = 1.0;
    for i in 1..sched.z {
        reach *= p;
        sum += discount * reach * rev.r(sched.x * i as f64);
        discount *= delta;
    }
    reach *= p;
    Ok(sum + discount / (1.0 - delta) * reach * rev.r(sched.x * sched.z as f64))
}

/// Optimal step count for a fixed step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZStar {
    pub z: u32,
    /// No `z <= z_max` met the stopping condition; `z` equals `z_max`.
    pub capped: bool,
}

impl ZStar {
    pub fn into_result(self, z_max: u32) -> Result<u32> {
        if self.capped {
            Err(Error::Capped { z_max })
        } else {
            Ok(self.z)
        }
    }
}

fn first_stop(z_max: u32, mut stop: impl FnMut(u32) -> bool) -> Result<ZStar> {
    if z_max == 0 {
        return Err(Error::param("z_max must be >= 1"));
    }
    for z in 1..=z_max {
        if stop(z) {
            return Ok(ZStar { z, capped: false });
        }
    }
    Ok(ZStar { z: z_max, capped: true })
}

/// Smallest `z` with `r(x z) / r(x (z+1)) >= p(x)`.
///
/// For log-concave `r` the ratio is non-decreasing in `z`, so this is the
/// smallest maximizer of `Pi(x, .)`.
pub fn z_star(curve: &RetentionCurve, rev: &RevenueModel, x: f64, z_max: u32) -> Result<ZStar> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("step size must be > 0, got {x}")));
    }
    let p = curve.eval(x)?;
    first_stop(z_max, |z| rev.r(x * z as f64) / rev.r(x * (z + 1) as f64) >= p)
}

/// Smallest `z` with `r(x z) / r(x (z+1)) + eps d(z x) >= p(x)`.
pub fn z_star_lasting(
    curve: &RetentionCurve,
    rev: &RevenueModel,
    eff: &LastingEffect,
    x: f64,
    z_max: u32,
) -> Result<ZStar> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("step size must be > 0, got {x}")));
    }
    let p = curve.eval(x)?;
    first_stop(z_max, |z| {
        rev.r(x * z as f64) / rev.r(x * (z + 1) as f64) + eff.deficit(z as f64 * x) >= p
    })
}
