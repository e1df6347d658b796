//! Time to adapt `l(x)`, the total rollout time `t_A(x) = (A/x - 1) l(x)`
//! and the average rate of increase `A / t_A(x)`.

use serde::{Deserialize, Serialize};

use crate::retention::{survival_s, RetentionCurve};
use crate::search::log_space;
use crate::{Error, Result};

/// Relative step for the central difference of `l`.
const FD_REL_STEP: f64 = 1e-6;
/// Bisection stops once the bracket on `x` is this narrow relative to `x`.
const INVERT_REL_TOL: f64 = 1e-12;
const WORKING_GRID_POINTS: usize = 64;
const SMALLEST_STEP_FRACTION: f64 = 1e-12;

/// `l(x) = c * x^a`; `Constant` is the `a = 0` case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdaptationClock {
    Constant { c: f64 },
    Power { c: f64, a: f64 },
}

impl AdaptationClock {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AdaptationClock::Constant { c } => c.is_finite() && c > 0.0,
            AdaptationClock::Power { c, a } => c.is_finite() && c > 0.0 && a.is_finite() && a >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid adaptation clock {self:?}")))
        }
    }

    /// Periods needed to adapt to one increase of size `x`.
    pub fn time_to_adapt(&self, x: f64) -> f64 {
        match *self {
            AdaptationClock::Constant { c } => c,
            AdaptationClock::Power { c, a } => c * x.powf(a),
        }
    }

    /// `x l'(x) / l(x)` in closed form.
    pub fn elasticity(&self, _x: f64) -> f64 {
        match *self {
            AdaptationClock::Constant { .. } => 0.0,
            AdaptationClock::Power { a, .. } => a,
        }
    }
}

fn check_step(total: f64, x: f64) -> Result<()> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::domain(format!("total increase must be positive, got {total}")));
    }
    if !(x > 0.0) || x > total {
        return Err(Error::domain(format!(
            "step must satisfy 0 < x <= A, got x = {x}, A = {total}"
        )));
    }
    Ok(())
}

/// `t_A(x) = (A/x - 1) l(x)`.
pub fn rollout_time(clock: &AdaptationClock, total: f64, x: f64) -> Result<f64> {
    check_step(total, x)?;
    Ok((total / x - 1.0) * clock.time_to_adapt(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InelasticityReport {
    /// `x l'(x) < l(x)` held at every grid point.
    pub inelastic: bool,
    /// Smallest `1 - x l'(x) / l(x)` seen on the grid.
    pub worst_margin: f64,
    pub worst_at: f64,
}

/// Checks `x l'(x) < l(x)` on `grid`, with `l'` from central differences.
pub fn is_inelastic(clock: &AdaptationClock, grid: &[f64]) -> InelasticityReport {
    let mut worst_margin = f64::INFINITY;
    let mut worst_at = f64::NAN;
    for &x in grid {
        let h = FD_REL_STEP * x;
        let dl = (clock.time_to_adapt(x + h) - clock.time_to_adapt(x - h)) / (2.0 * h);
        let margin = 1.0 - x * dl / clock.time_to_adapt(x);
        if margin < worst_margin {
            worst_margin = margin;
            worst_at = x;
        }
    }
    InelasticityReport {
        inelastic: worst_margin > 0.0,
        worst_margin,
        worst_at,
    }
}

/// Average rate of increase `A / t_A(x)` for `0 < x < A`.
pub fn avg_rate(clock: &AdaptationClock, total: f64, x: f64) -> Result<f64> {
    check_step(total, x)?;
    if x == total {
        return Err(Error::InfiniteRate);
    }
    Ok(total / rollout_time(clock, total, x)?)
}

fn working_grid(total: f64) -> Vec<f64> {
    log_space(total * 1e-6, total * (1.0 - 1e-6), WORKING_GRID_POINTS)
}

fn require_inelastic(clock: &AdaptationClock, total: f64) -> Result<()> {
    let report = is_inelastic(clock, &working_grid(total));
    if report.inelastic {
        Ok(())
    } else {
        Err(Error::param(format!(
            "clock is elastic at x = {} (margin {}); the rate is not invertible",
            report.worst_at, report.worst_margin
        )))
    }
}

/// The step `x` whose average rate equals `rate`.
///
/// Only defined for inelastic clocks, where `t_A` is strictly decreasing
/// and the rate is therefore strictly increasing in `x`.
pub fn invert_rate(clock: &AdaptationClock, total: f64, rate: f64) -> Result<f64> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::domain(format!("total increase must be positive, got {total}")));
    }
    require_inelastic(clock, total)?;
    let mut lo = total * SMALLEST_STEP_FRACTION;
    let mut hi = total;
    let rate_lo = avg_rate(clock, total, lo)?;
    if !(rate > rate_lo) || !rate.is_finite() {
        return Err(Error::Range {
            rate,
            lo: rate_lo,
            hi: f64::INFINITY,
        });
    }
    while hi - lo > INVERT_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if avg_rate(clock, total, mid)? < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One point of the rate-vs-survival curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub rate: f64,
    pub x: f64,
    pub survival: f64,
}

/// Survival `s_A` as a function of the average rate, over `points` rates
/// log-spaced between the rates of steps `A/1000` and `0.999 A`.
pub fn rate_survival_curve(
    curve: &RetentionCurve,
    clock: &AdaptationClock,
    total: f64,
    points: usize,
) -> Result<Vec<RatePoint>> {
    if points < 2 {
        return Err(Error::param("rate sweep needs at least two points"));
    }
    check_step(total, total)?;
    require_inelastic(clock, total)?;
    let r_lo = avg_rate(clock, total, total * 1e-3)?;
    let r_hi = avg_rate(clock, total, total * 0.999)?;
    log_space(r_lo, r_hi, points)
        .into_iter()
        .map(|rate| {
            let x = invert_rate(clock, total, rate)?.min(total);
            Ok(RatePoint {
                rate,
                x,
                survival: survival_s(curve, total, x)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ONE: AdaptationClock = AdaptationClock::Constant { c: 1.0 };

    #[test]
    fn rollout_examples() {
        assert_eq!(rollout_time(&ONE, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(rollout_time(&ONE, 1.0, 1.0).unwrap(), 0.0);
        let p = AdaptationClock::Power { c: 2.0, a: 0.5 };
        assert_eq!(rollout_time(&p, 4.0, 1.0).unwrap(), 6.0);
        assert_eq!(rollout_time(&p, 3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(rollout_time(&ONE, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rollout_time(&ONE, 1.0, 1.1), Err(Error::Domain(_))));
    }

    #[test]
    fn elasticity_checks() {
        let grid = log_space(1e-3, 10.0, 50);
        let r = is_inelastic(&ONE, &grid);
        assert!(r.inelastic);
        assert!((r.worst_margin - 1.0).abs() < 1e-12);
        assert!(is_inelastic(&AdaptationClock::Power { c: 1.0, a: 0.5 }, &grid).inelastic);
        let elastic = is_inelastic(&AdaptationClock::Power { c: 1.0, a: 2.0 }, &grid);
        assert!(!elastic.inelastic);
        assert!((elastic.worst_margin + 1.0).abs() < 1e-6);
        assert!(grid.contains(&elastic.worst_at));
    }

    #[test]
    fn closed_form_elasticity_matches_differences() {
        let clock = AdaptationClock::Power { c: 1.7, a: 0.3 };
        let r = is_inelastic(&clock, &[0.4]);
        assert!((1.0 - r.worst_margin - clock.elasticity(0.4)).abs() < 1e-8);
    }

    #[test]
    fn rate_examples() {
        assert_relative_eq!(avg_rate(&ONE, 1.0, 0.5).unwrap(), 1.0);
        assert_relative_eq!(avg_rate(&ONE, 1.0, 0.25).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(avg_rate(&AdaptationClock::Constant { c: 2.0 }, 2.0, 1.0).unwrap(), 1.0);
        assert!(matches!(avg_rate(&ONE, 1.0, 1.0), Err(Error::InfiniteRate)));
    }

    #[test]
    fn invert_examples() {
        assert_relative_eq!(invert_rate(&ONE, 1.0, 1.0).unwrap(), 0.5, max_relative = 1e-9);
        assert_relative_eq!(invert_rate(&ONE, 1.0, 1.0 / 3.0).unwrap(), 0.25, max_relative = 1e-9);
    }

    #[test]
    fn invert_refuses_elastic_clock_and_bad_rates() {
        let elastic = AdaptationClock::Power { c: 1.0, a: 2.0 };
        assert!(matches!(invert_rate(&elastic, 1.0, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(invert_rate(&ONE, 1.0, 0.0), Err(Error::Range { .. })));
        assert!(matches!(invert_rate(&ONE, 1.0, -2.0), Err(Error::Range { .. })));
        let curve = RetentionCurve::exp_power(2.0).unwrap();
        assert!(matches!(
            rate_survival_curve(&curve, &elastic, 1.0, 8),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn rate_curve_is_monotone_for_log_concave_curve() {
        let curve = RetentionCurve::exp_power(2.0).unwrap();
        let pts = rate_survival_curve(&curve, &ONE, 2.0, 64).unwrap();
        assert_eq!(pts.len(), 64);
        assert!(pts
            .windows(2)
            .all(|w| w[1].rate > w[0].rate && w[1].survival <= w[0].survival));
    }
}
