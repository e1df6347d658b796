//! Numerical log-concavity checks on a grid, and the tangent point of
//! curves that are log-concave on `(0, inf)` but jump at zero.

use serde::{Deserialize, Serialize};

use super::RetentionCurve;
use crate::search::{golden_section_max, log_space};
use crate::{Error, Result};

pub const DEFAULT_CURVATURE_TOL: f64 = 1e-9;

const GRID_LO: f64 = 1e-4;
const GRID_HI: f64 = 10.0;
const GRID_POINTS: usize = 256;
/// Points where `p` falls below this are treated as outside the support
/// when building the default grid.
const SUPPORT_FLOOR: f64 = 1e-250;

const TANGENT_REL_TOL: f64 = 1e-6;
const TANGENT_SCAN_LO: f64 = 1e-8;
const TANGENT_SCAN_HI: f64 = 1e6;
const TANGENT_SCAN_POINTS: usize = 1200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurvatureKind {
    LogConcave,
    LogConvex,
    Neither,
    DiscontinuousLogConcaveTail,
}

impl std::fmt::Display for CurvatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CurvatureKind::LogConcave => "LogConcave",
            CurvatureKind::LogConvex => "LogConvex",
            CurvatureKind::Neither => "Neither",
            CurvatureKind::DiscontinuousLogConcaveTail => "DiscontinuousLogConcaveTail",
        };
        f.write_str(s)
    }
}

/// Outcome of a curvature scan.
///
/// The evidence fields hold the extreme normalized second differences of
/// `ln p`: the change in slope between adjacent grid cells divided by the
/// larger of the two slopes in magnitude. Concavity needs every value to be
/// at most `tol`, convexity at least `-tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureClass {
    pub kind: CurvatureKind,
    pub max_second_diff: f64,
    pub min_second_diff: f64,
    pub grid_points: usize,
    pub tol: f64,
}

impl CurvatureClass {
    /// The second difference that decided the class: the largest one for
    /// concave results, the smallest for convex ones, otherwise the largest
    /// in magnitude.
    pub fn evidence(&self) -> f64 {
        match self.kind {
            CurvatureKind::LogConcave | CurvatureKind::DiscontinuousLogConcaveTail => self.max_second_diff,
            CurvatureKind::LogConvex => self.min_second_diff,
            CurvatureKind::Neither => {
                if self.max_second_diff.abs() >= self.min_second_diff.abs() {
                    self.max_second_diff
                } else {
                    self.min_second_diff
                }
            }
        }
    }
}

/// Default grid: 256 log-spaced points on `(1e-4, min(domain_max, 10)]`,
/// shortened to the part of the support where `p` is representable.
pub fn default_classification_grid(curve: &RetentionCurve) -> Result<Vec<f64>> {
    let mut hi = curve.domain_max().min(GRID_HI);
    let alive = |x: f64| curve.eval_unchecked(x) > SUPPORT_FLOOR;
    if !alive(GRID_LO) {
        return Err(Error::Classification(format!(
            "p vanishes already at x = {GRID_LO}; nothing to classify"
        )));
    }
    if !alive(hi) {
        let mut lo = GRID_LO;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if alive(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi = lo;
    }
    if hi <= GRID_LO * 1.01 {
        return Err(Error::Classification(format!(
            "support of p ends at {hi}, too close to zero for a curvature grid"
        )));
    }
    Ok(log_space(GRID_LO, hi, GRID_POINTS))
}

/// Classifies `ln p` on `grid` by second differences.
pub fn classify_curvature(curve: &RetentionCurve, grid: &[f64], tol: f64) -> Result<CurvatureClass> {
    if grid.len() < 5 {
        return Err(Error::param(format!(
            "curvature grid needs at least 5 points, got {}",
            grid.len()
        )));
    }
    if !(grid[0] > 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("curvature grid must be positive and strictly ascending"));
    }
    let mut g = Vec::with_capacity(grid.len());
    for &x in grid {
        let v = curve.ln_eval(x)?;
        if v == f64::NEG_INFINITY {
            return Err(Error::Classification(format!("p(x) = 0 at grid point x = {x}")));
        }
        g.push(v);
    }

    let mut max_d = f64::NEG_INFINITY;
    let mut min_d = f64::INFINITY;
    for i in 1..grid.len() - 1 {
        let left = (g[i] - g[i - 1]) / (grid[i] - grid[i - 1]);
        let right = (g[i + 1] - g[i]) / (grid[i + 1] - grid[i]);
        let scale = left.abs().max(right.abs());
        let d = if scale > 0.0 { (right - left) / scale } else { 0.0 };
        max_d = max_d.max(d);
        min_d = min_d.min(d);
    }

    let kind = if max_d <= tol {
        if curve.is_continuous_at_zero() {
            CurvatureKind::LogConcave
        } else {
            CurvatureKind::DiscontinuousLogConcaveTail
        }
    } else if min_d >= -tol {
        CurvatureKind::LogConvex
    } else {
        CurvatureKind::Neither
    };

    Ok(CurvatureClass {
        kind,
        max_second_diff: max_d,
        min_second_diff: min_d,
        grid_points: grid.len(),
        tol,
    })
}

/// Classification on the default grid and tolerance.
pub fn classify(curve: &RetentionCurve) -> Result<CurvatureClass> {
    let grid = default_classification_grid(curve)?;
    classify_curvature(curve, &grid, DEFAULT_CURVATURE_TOL)
}

/// The point `x̄` maximizing `ln p(x) / x` for a curve that is log-concave on
/// `(0, inf)` with `p(0+) < 1`.
///
/// Survival `p(x)^(A/x)` rises on `(0, x̄]` and falls on `[x̄, inf)`. When
/// `ln p(x) / x` keeps increasing over the whole domain, for example when
/// `ln p` is linear, there is no interior maximizer and the upper end of the
/// domain is returned (`inf` for unbounded curves).
pub fn tangent_point(curve: &RetentionCurve) -> Result<f64> {
    let class = classify(curve)?;
    if class.kind != CurvatureKind::DiscontinuousLogConcaveTail {
        return Err(Error::Classification(format!(
            "tangent point needs a discontinuous log-concave curve, got {}",
            class.kind
        )));
    }

    let hi = curve.domain_max().min(TANGENT_SCAN_HI);
    let ratio = |x: f64| curve.ln_unchecked(x) / x;
    let grid = log_space(TANGENT_SCAN_LO.min(hi * 1e-3), hi, TANGENT_SCAN_POINTS);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = ratio(x);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    if best == grid.len() - 1 {
        return Ok(curve.domain_max());
    }
    // ln p(x)/x -> -inf as x -> 0+, so the argmax is never the first point.
    let lo = grid[best.saturating_sub(1)];
    let (x, _) = golden_section_max(ratio, lo, grid[best + 1], TANGENT_REL_TOL);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::super::{ArumSpec, Cost, Noise};
    use super::*;

    fn kind(c: &RetentionCurve) -> CurvatureKind {
        classify(c).unwrap().kind
    }

    #[test]
    fn classifies_known_families() {
        assert_eq!(
            kind(&RetentionCurve::exp_power(2.0).unwrap()),
            CurvatureKind::LogConcave
        );
        assert_eq!(kind(&RetentionCurve::poly_cap(2.0).unwrap()), CurvatureKind::LogConcave);
        assert_eq!(
            kind(&RetentionCurve::inverse_power(1.0).unwrap()),
            CurvatureKind::LogConvex
        );
        assert_eq!(kind(&RetentionCurve::exp_power(0.5).unwrap()), CurvatureKind::LogConvex);
        assert_eq!(
            kind(&RetentionCurve::scaled_exp_power(0.5, 2.0).unwrap()),
            CurvatureKind::DiscontinuousLogConcaveTail
        );
    }

    #[test]
    fn linear_log_resolves_to_concave() {
        let c = classify(&RetentionCurve::exp_power(1.0).unwrap()).unwrap();
        assert_eq!(c.kind, CurvatureKind::LogConcave);
        assert!(c.evidence().abs() < 1e-12, "evidence {}", c.evidence());
    }

    #[test]
    fn neither_for_mixed_table() {
        // Slope of ln p steepens, then flattens.
        let t = RetentionCurve::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.9, 0.5, 0.45]).unwrap();
        let grid: Vec<f64> = (1..60).map(|i| i as f64 * 0.05).collect();
        assert_eq!(
            classify_curvature(&t, &grid, 1e-9).unwrap().kind,
            CurvatureKind::Neither
        );
    }

    #[test]
    fn arum_with_infinite_support_has_a_jump() {
        let a = ArumSpec::new(1.0, Cost::Linear { slope: 1.0 }, Noise::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert_eq!(
            kind(&RetentionCurve::arum(a).unwrap()),
            CurvatureKind::DiscontinuousLogConcaveTail
        );
        let u = ArumSpec::new(
            1.0,
            Cost::Power {
                coeff: 0.5,
                exponent: 2.0,
            },
            Noise::Uniform { lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        assert_eq!(kind(&RetentionCurve::arum(u).unwrap()), CurvatureKind::LogConcave);
    }

    #[test]
    fn zero_on_grid_is_reported() {
        let c = RetentionCurve::poly_cap(2.0).unwrap();
        let err = classify_curvature(&c, &[0.2, 0.4, 0.6, 0.8, 1.0, 1.2], 1e-9).unwrap_err();
        match err {
            Error::Classification(msg) => assert!(msg.contains("x = 1"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn grid_preconditions() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        assert!(classify_curvature(&c, &[0.1, 0.2, 0.3, 0.4], 1e-9).is_err());
        assert!(classify_curvature(&c, &[0.1, 0.2, 0.2, 0.4, 0.5], 1e-9).is_err());
    }

    fn grid_argmax_ratio(c: &RetentionCurve) -> f64 {
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 1..=400_000 {
            let x = i as f64 * 1e-5;
            let v = c.eval(x).unwrap().ln() / x;
            if v > best.1 {
                best = (x, v);
            }
        }
        best.0
    }

    #[test]
    fn tangent_point_examples() {
        let c = RetentionCurve::scaled_exp_power(0.5, 2.0).unwrap();
        let t = tangent_point(&c).unwrap();
        assert!((t - grid_argmax_ratio(&c)).abs() <= 1e-5);
        assert!((t - 0.832_554_611_157_697_7).abs() <= 2e-6, "{t}");

        let c = RetentionCurve::scaled_exp_power(0.9, 2.0).unwrap();
        let t = tangent_point(&c).unwrap();
        assert!((t - grid_argmax_ratio(&c)).abs() <= 1e-5);
        assert!((t - 0.324_592_845_974_501_1).abs() <= 1e-6, "{t}");
    }

    #[test]
    fn tangent_point_without_interior_max() {
        // ln p = -1 - x, so ln p / x = -1/x - 1 increases forever.
        let c = RetentionCurve::scaled_exp_power((-1.0f64).exp(), 1.0).unwrap();
        assert_eq!(tangent_point(&c).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tangent_point_needs_the_right_class() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        assert!(matches!(tangent_point(&c), Err(Error::Classification(_))));
    }
}
