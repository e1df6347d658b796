//! Additive random utility model: a user facing an increase `x` pays
//! `c(x) + Y` and stays while `u0 - c(x) - Y > 0`, so `p(x) = F(u0 - c(x))`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Standard normal CDF.
///
/// Evaluated through the complementary error function, which keeps full
/// relative precision deep into the lower tail where `log Φ` is needed.
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y / SQRT_2)
}

/// `ln Φ(y)`, finite as long as `Φ(y)` does not underflow.
pub fn ln_normal_cdf(y: f64) -> f64 {
    if y > -5.0 {
        // ln(1 - q) for a small upper tail q.
        (-0.5 * libm::erfc(y / SQRT_2)).ln_1p()
    } else {
        normal_cdf(y).ln()
    }
}

/// Deterministic disutility `c(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cost {
    /// `c(x) = slope * x`
    Linear { slope: f64 },
    /// `c(x) = coeff * x^exponent`, `exponent >= 1`
    Power { coeff: f64, exponent: f64 },
}

impl Cost {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Cost::Linear { slope } => slope * x,
            Cost::Power { coeff, exponent } => coeff * x.powf(exponent),
        }
    }

    /// True when `c` is convex (or linear) on `[0, inf)`.
    pub fn is_convex(&self) -> bool {
        match *self {
            Cost::Linear { .. } => true,
            Cost::Power { exponent, .. } => exponent >= 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Cost::Linear { slope } if !(slope.is_finite() && slope >= 0.0) => {
                Err(Error::param(format!("linear cost slope must be >= 0, got {slope}")))
            }
            Cost::Power { coeff, exponent }
                if !(coeff.is_finite() && coeff >= 0.0 && exponent.is_finite() && exponent >= 1.0) =>
            {
                Err(Error::param(format!(
                    "power cost needs coeff >= 0 and exponent >= 1, got ({coeff}, {exponent})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Distribution `F` of the random disutility `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Logistic { loc: f64, scale: f64 },
}

impl Noise {
    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            Noise::Normal { mean, sd } => normal_cdf((y - mean) / sd),
            Noise::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            Noise::Exponential { rate } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -(-rate * y).exp_m1()
                }
            }
            Noise::Logistic { loc, scale } => 1.0 / (1.0 + (-(y - loc) / scale).exp()),
        }
    }

    /// `ln F(y)`; `-inf` outside the support.
    pub fn ln_cdf(&self, y: f64) -> f64 {
        match *self {
            Noise::Normal { mean, sd } => ln_normal_cdf((y - mean) / sd),
            Noise::Logistic { loc, scale } => -(-(y - loc) / scale).exp().ln_1p(),
            Noise::Exponential { rate } if y > 0.0 => {
                let t = rate * y;
                if t > 1.0 {
                    (-(-t).exp()).ln_1p()
                } else {
                    (-(-t).exp_m1()).ln()
                }
            }
            _ => self.cdf(y).ln(),
        }
    }

    /// Draws `Y` from two independent uniforms on `[0, 1)`.
    ///
    /// Normal draws use the Box-Muller transform; the rest invert the CDF.
    /// `u2` is only consumed by the normal family.
    pub fn sample(&self, u1: f64, u2: f64) -> f64 {
        match *self {
            Noise::Normal { mean, sd } => {
                // 1 - u1 lies in (0, 1], so the log is finite.
                let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
                mean + sd * radius * (2.0 * PI * u2).cos()
            }
            Noise::Uniform { lo, hi } => lo + (hi - lo) * u1,
            Noise::Exponential { rate } => -(1.0 - u1).ln() / rate,
            Noise::Logistic { loc, scale } => {
                let u = u1.max(f64::MIN_POSITIVE);
                loc + scale * (u / (1.0 - u)).ln()
            }
        }
    }

    /// Every built-in family has a log-concave CDF.
    pub fn is_log_concave(&self) -> bool {
        true
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Noise::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Noise::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && hi > lo,
            Noise::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Noise::Logistic { loc, scale } => loc.is_finite() && scale.is_finite() && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid noise distribution {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArumSpec {
    pub u0: f64,
    pub cost: Cost,
    pub noise: Noise,
}

impl ArumSpec {
    pub fn new(u0: f64, cost: Cost, noise: Noise) -> Result<Self> {
        let spec = ArumSpec { u0, cost, noise };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0.is_finite() && self.u0 > 0.0) {
            return Err(Error::param(format!("u0 must be > 0, got {}", self.u0)));
        }
        self.cost.validate()?;
        self.noise.validate()
    }

    /// Utility left after an increase `x`, before the random term.
    pub fn threshold(&self, x: f64) -> f64 {
        self.u0 - self.cost.eval(x)
    }

    /// `F(u0 - c(x))` without the `p(0) = 1` convention.
    pub fn stay_probability(&self, x: f64) -> f64 {
        self.noise.cdf(self.threshold(x))
    }

    pub fn ln_stay_probability(&self, x: f64) -> f64 {
        self.noise.ln_cdf(self.threshold(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [-40, y] of the standard normal density.
    fn cdf_by_quadrature(y: f64) -> f64 {
        let n = 400_000;
        let a = -40.0;
        let h = (y - a) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut s = pdf(a) + pdf(y);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_cdf_fixed_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(40.0) - 1.0).abs() <= 1e-12);
        assert!((normal_cdf(1.0) - 0.841_344_7).abs() < 1e-7);
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        for &y in &[-6.0, -3.3, -1.0, -0.25, 0.4, 1.0, 2.5, 5.0] {
            let want = cdf_by_quadrature(y);
            assert!((normal_cdf(y) - want).abs() < 1e-10, "y={y}");
        }
    }

    #[test]
    fn ln_cdf_is_consistent() {
        for &y in &[-30.0, -8.0, -1.0, 0.0, 2.0, 7.0] {
            let n = Noise::Normal { mean: 0.0, sd: 1.0 };
            assert!((n.ln_cdf(y) - n.cdf(y).ln()).abs() <= 1e-12 * n.cdf(y).ln().abs().max(1e-3));
        }
        let e = Noise::Exponential { rate: 2.0 };
        for &y in &[1e-9, 0.1, 0.7, 3.0] {
            assert!((e.ln_cdf(y) - e.cdf(y).ln()).abs() < 1e-12);
        }
        assert_eq!(e.ln_cdf(-1.0), f64::NEG_INFINITY);
        let l = Noise::Logistic { loc: 0.5, scale: 2.0 };
        assert!((l.ln_cdf(0.1) - l.cdf(0.1).ln()).abs() < 1e-14);
    }

    #[test]
    fn samples_follow_the_cdf() {
        // Quantile check on a fixed lattice of uniforms.
        let noises = [
            Noise::Uniform { lo: -1.0, hi: 2.0 },
            Noise::Exponential { rate: 1.5 },
            Noise::Logistic { loc: 0.2, scale: 0.7 },
        ];
        for n in noises {
            for i in 1..20 {
                let u = i as f64 / 20.0;
                assert!((n.cdf(n.sample(u, 0.3)) - u).abs() < 1e-12, "{n:?} u={u}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ArumSpec::new(0.0, Cost::Linear { slope: 1.0 }, Noise::Normal { mean: 0.0, sd: 1.0 }).is_err());
        assert!(ArumSpec::new(
            1.0,
            Cost::Power {
                coeff: 1.0,
                exponent: 0.5
            },
            Noise::Normal { mean: 0.0, sd: 1.0 }
        )
        .is_err());
        assert!(ArumSpec::new(1.0, Cost::Linear { slope: 1.0 }, Noise::Uniform { lo: 1.0, hi: 1.0 }).is_err());
    }
}
