//! Retention curves `p(x)`: the probability that a user stays after one
//! increase of size `x`, with `p(0) = 1`.

mod arum;
mod curvature;

use serde::{Deserialize, Serialize};

pub use arum::{ln_normal_cdf, normal_cdf, ArumSpec, Cost, Noise};
pub use curvature::{
    classify, classify_curvature, default_classification_grid, tangent_point, CurvatureClass, CurvatureKind,
    DEFAULT_CURVATURE_TOL,
};

use crate::{Error, Result};

/// Sampled curve evaluated by piecewise-linear interpolation.
///
/// The first sample sits at `x = 0` and holds the right limit `p(0+)`; the
/// curve itself still evaluates to 1 at exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Table {
    fn validate(&self) -> Result<()> {
        if self.x.len() != self.p.len() {
            return Err(Error::param(format!(
                "tabulated curve has {} x values but {} p values",
                self.x.len(),
                self.p.len()
            )));
        }
        if self.x.len() < 2 {
            return Err(Error::param("tabulated curve needs at least two samples"));
        }
        if self.x[0] != 0.0 {
            return Err(Error::param("tabulated curve must start at x = 0"));
        }
        for w in self.x.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::param("tabulated x values must be finite and strictly ascending"));
            }
        }
        for (i, &v) in self.p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("tabulated p[{i}] = {v} is outside [0, 1]")));
            }
            if i > 0 && v > self.p[i - 1] {
                return Err(Error::param(format!("tabulated p increases at index {i}")));
            }
        }
        Ok(())
    }

    fn interpolate(&self, x: f64) -> f64 {
        let j = self.x.partition_point(|&xi| xi <= x);
        if j >= self.x.len() {
            return *self.p.last().unwrap();
        }
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let (p0, p1) = (self.p[j - 1], self.p[j]);
        // Convex combination keeps the result inside [p1, p0].
        let t = (x - x0) / (x1 - x0);
        (1.0 - t) * p0 + t * p1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveFamily {
    /// `exp(-x^k)`
    ExpPower {
        k: f64,
    },
    /// `(1 - x^k)` on `[0, 1]`, zero afterwards.
    PolyCap {
        k: f64,
    },
    /// `(1 + x)^-k`
    InversePower {
        k: f64,
    },
    /// `scale * exp(-x^k)` for `x > 0`; discontinuous at zero when `scale < 1`.
    ScaledExpPower {
        scale: f64,
        k: f64,
    },
    /// `F(u0 - c(x))` for `x > 0`.
    Arum(ArumSpec),
    Tabulated(Table),
}

/// An evaluable retention curve.
///
/// Construction validates the family parameters and records the right limit
/// at zero and the upper end of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveFamily", into = "CurveFamily")]
pub struct RetentionCurve {
    family: CurveFamily,
    jump_at_zero: f64,
    domain_max: f64,
}

impl TryFrom<CurveFamily> for RetentionCurve {
    type Error = Error;

    fn try_from(family: CurveFamily) -> Result<Self> {
        RetentionCurve::new(family)
    }
}

impl From<RetentionCurve> for CurveFamily {
    fn from(curve: RetentionCurve) -> Self {
        curve.family
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl RetentionCurve {
    pub fn new(family: CurveFamily) -> Result<Self> {
        let (jump_at_zero, domain_max) = match &family {
            CurveFamily::ExpPower { k } | CurveFamily::PolyCap { k } | CurveFamily::InversePower { k } => {
                positive("k", *k)?;
                (1.0, f64::INFINITY)
            }
            CurveFamily::ScaledExpPower { scale, k } => {
                positive("k", *k)?;
                if !(*scale > 0.0 && *scale <= 1.0) {
                    return Err(Error::param(format!("scale must lie in (0, 1], got {scale}")));
                }
                (*scale, f64::INFINITY)
            }
            CurveFamily::Arum(spec) => {
                spec.validate()?;
                (spec.stay_probability(0.0), f64::INFINITY)
            }
            CurveFamily::Tabulated(table) => {
                table.validate()?;
                (table.p[0], *table.x.last().unwrap())
            }
        };
        Ok(RetentionCurve {
            family,
            jump_at_zero,
            domain_max,
        })
    }

    pub fn exp_power(k: f64) -> Result<Self> {
        Self::new(CurveFamily::ExpPower { k })
    }

    pub fn poly_cap(k: f64) -> Result<Self> {
        Self::new(CurveFamily::PolyCap { k })
    }

    pub fn inverse_power(k: f64) -> Result<Self> {
        Self::new(CurveFamily::InversePower { k })
    }

    pub fn scaled_exp_power(scale: f64, k: f64) -> Result<Self> {
        Self::new(CurveFamily::ScaledExpPower { scale, k })
    }

    pub fn arum(spec: ArumSpec) -> Result<Self> {
        Self::new(CurveFamily::Arum(spec))
    }

    pub fn tabulated(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        Self::new(CurveFamily::Tabulated(Table { x, p }))
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    /// `lim_{x -> 0+} p(x)`.
    pub fn jump_at_zero(&self) -> f64 {
        self.jump_at_zero
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn is_continuous_at_zero(&self) -> bool {
        self.jump_at_zero >= 1.0
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::domain(format!("p(x) requires x >= 0, got {x}")));
        }
        if x > self.domain_max {
            return Err(Error::domain(format!(
                "x = {x} exceeds the curve's domain [0, {}]",
                self.domain_max
            )));
        }
        Ok(())
    }

    /// Evaluates `p(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0;
        }
        match &self.family {
            CurveFamily::ExpPower { k } => (-x.powf(*k)).exp(),
            CurveFamily::PolyCap { k } => {
                if x <= 1.0 {
                    1.0 - x.powf(*k)
                } else {
                    0.0
                }
            }
            CurveFamily::InversePower { k } => (1.0 + x).powf(-k),
            CurveFamily::ScaledExpPower { scale, k } => scale * (-x.powf(*k)).exp(),
            CurveFamily::Arum(spec) => spec.stay_probability(x),
            CurveFamily::Tabulated(t) => t.interpolate(x),
        }
    }

    /// `g(x) = ln p(x)`, using closed forms where the family has one.
    /// Returns `-inf` where `p(x) = 0`.
    pub fn ln_eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.ln_unchecked(x))
    }

    pub(crate) fn ln_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match &self.family {
            CurveFamily::ExpPower { k } => -x.powf(*k),
            CurveFamily::PolyCap { k } => {
                if x < 1.0 {
                    (-x.powf(*k)).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            CurveFamily::InversePower { k } => -k * x.ln_1p(),
            CurveFamily::ScaledExpPower { scale, k } => scale.ln() - x.powf(*k),
            CurveFamily::Arum(spec) => spec.ln_stay_probability(x),
            CurveFamily::Tabulated(t) => t.interpolate(x).ln(),
        }
    }
}

/// Survival after a total increase `A` reached in steps of `x`:
/// `p(x)^(A/x)` with a real exponent.
pub fn survival_s(curve: &RetentionCurve, total: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || x > total {
        return Err(Error::domain(format!(
            "survival needs 0 < x <= A, got x = {x}, A = {total}"
        )));
    }
    if x == total {
        return curve.eval(x);
    }
    let g = curve.ln_eval(x)?;
    if g == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(((total / x) * g).exp())
}

/// `p(x)^z` for an integer step count, as a left-to-right product.
pub fn survival_steps(curve: &RetentionCurve, x: f64, z: u32) -> Result<f64> {
    let p = curve.eval(x)?;
    Ok((0..z).fold(1.0, |acc, _| acc * p))
}

/// Both sides of the product bound `p(sum x_j)` vs `prod p(x_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBound {
    pub of_sum: f64,
    pub product: f64,
    /// `p(sum) <= prod`, up to rounding.
    pub sum_le_product: bool,
    /// `p(sum) >= prod`, up to rounding.
    pub sum_ge_product: bool,
}

impl ProductBound {
    pub fn is_equality(&self) -> bool {
        self.sum_le_product && self.sum_ge_product
    }
}

const PRODUCT_BOUND_RTOL: f64 = 1e-12;

pub fn product_bound_check(curve: &RetentionCurve, increments: &[f64]) -> Result<ProductBound> {
    if let Some(&bad) = increments.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::domain(format!("increments must be >= 0, got {bad}")));
    }
    let total: f64 = increments.iter().sum();
    let of_sum = curve.eval(total)?;
    let mut product = 1.0;
    for &x in increments {
        product *= curve.eval(x)?;
    }
    let slack = PRODUCT_BOUND_RTOL * of_sum.max(product);
    Ok(ProductBound {
        of_sum,
        product,
        sum_le_product: of_sum <= product + slack,
        sum_ge_product: of_sum + slack >= product,
    })
}
