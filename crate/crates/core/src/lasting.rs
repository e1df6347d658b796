//! Incomplete adaptation. The `i`-th increase of size `x` is met with
//! retention `p(x) - eps * d((i-1) x)`, so small steps accumulate a deficit.

use serde::{Deserialize, Serialize};

use crate::retention::{ArumSpec, RetentionCurve};
use crate::{Error, Result};

pub const DEFAULT_Z_MAX: u32 = 10_000;

/// Shape of the lasting deficit `d`, with `d(0) = 0` and `d` strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Decay {
    /// `d(t) = t`
    Linear,
    /// `d(t) = t^exponent`
    Power { exponent: f64 },
}

impl Decay {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Decay::Linear => t,
            Decay::Power { exponent } => t.powf(exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LastingEffect {
    pub epsilon: f64,
    pub decay: Decay,
}

impl LastingEffect {
    pub fn new(epsilon: f64, decay: Decay) -> Result<Self> {
        let eff = LastingEffect { epsilon, decay };
        eff.validate()?;
        Ok(eff)
    }

    /// Complete adaptation.
    pub fn none() -> Self {
        LastingEffect {
            epsilon: 0.0,
            decay: Decay::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::param(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Decay::Power { exponent } = self.decay {
            if !(exponent.is_finite() && exponent > 0.0) {
                return Err(Error::param(format!("decay exponent must be > 0, got {exponent}")));
            }
        }
        Ok(())
    }

    /// `eps * d(t)` for the inconvenience `t` accumulated so far.
    pub fn deficit(&self, accumulated: f64) -> f64 {
        self.epsilon * self.decay.eval(accumulated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRetention {
    pub value: f64,
    /// `p(x) - eps d((i-1) x)` was negative and got clamped to 0.
    pub clamped: bool,
}

fn check_step_index(x: f64, i: u32) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("step size must be > 0, got {x}")));
    }
    if i == 0 {
        return Err(Error::domain("step index starts at 1"));
    }
    Ok(())
}

/// Retention at the `i`-th increase: `max(p(x) - eps d((i-1) x), 0)`.
pub fn step_retention(curve: &RetentionCurve, eff: &LastingEffect, x: f64, i: u32) -> Result<StepRetention> {
    check_step_index(x, i)?;
    let raw = curve.eval(x)? - eff.deficit((i - 1) as f64 * x);
    Ok(StepRetention {
        value: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// ARUM form: `F(u0 - c(x) - eps d((i-1) x))`.
pub fn arum_step_retention(arum: &ArumSpec, eff: &LastingEffect, x: f64, i: u32) -> Result<f64> {
    check_step_index(x, i)?;
    Ok(arum.noise.cdf(arum.threshold(x) - eff.deficit((i - 1) as f64 * x)))
}

/// Integer step count `z` with `A = z x`.
pub fn step_count(total: f64, x: f64) -> Result<u32> {
    if !(x > 0.0 && total > 0.0) {
        return Err(Error::domain(format!("need A > 0 and x > 0, got A = {total}, x = {x}")));
    }
    let ratio = total / x;
    let z = ratio.round();
    if z < 1.0 || z > u32::MAX as f64 || (ratio - z).abs() > 1e-9 * z {
        return Err(Error::domain(format!(
            "A / x = {ratio} is not a positive integer step count"
        )));
    }
    Ok(z as u32)
}

/// `prod_{i=1..z} p_i(x)`.
pub fn survival_lasting_steps(curve: &RetentionCurve, eff: &LastingEffect, x: f64, z: u32) -> Result<f64> {
    let mut s = 1.0;
    for i in 1..=z {
        let step = step_retention(curve, eff, x, i)?;
        if step.value == 0.0 {
            return Ok(0.0);
        }
        s *= step.value;
    }
    Ok(s)
}

/// `s_{A,eps}(x)`; `A / x` must be a positive integer.
pub fn survival_s_lasting(curve: &RetentionCurve, eff: &LastingEffect, total: f64, x: f64) -> Result<f64> {
    let z = step_count(total, x)?;
    survival_lasting_steps(curve, eff, x, z)
}

/// Survival under the ARUM form of the deficit.
pub fn arum_survival_lasting(arum: &ArumSpec, eff: &LastingEffect, x: f64, z: u32) -> Result<f64> {
    let mut s = 1.0;
    for i in 1..=z {
        s *= arum_step_retention(arum, eff, x, i)?;
    }
    Ok(s)
}

/// `(p(x) - eps d(A/2))_+^{floor(z/2)}` with `x = A / z`.
///
/// Every step with `(i-1) x >= A/2` is at most `p(x) - eps d(A/2)`, there
/// are `floor(z/2)` of them, and the remaining factors are at most 1.
pub fn lasting_upper_bound(curve: &RetentionCurve, eff: &LastingEffect, total: f64, z: u32) -> Result<f64> {
    if z == 0 {
        return Err(Error::domain("step count must be >= 1"));
    }
    let x = total / z as f64;
    let base = (curve.eval(x)? - eff.deficit(total / 2.0)).max(0.0);
    Ok(base.powi((z / 2) as i32))
}

/// A pair of admissible step sizes where the smaller step loses more users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x_small: f64,
    pub s_small: f64,
    pub x_large: f64,
    pub s_large: f64,
}

/// Scans `x = A/z` for `z = 1..=z_max` and returns the first `x1 < x2`
/// with `s_{A,eps}(x1) < s_{A,eps}(x2)`, if any.
pub fn non_monotonicity_witness(
    curve: &RetentionCurve,
    eff: &LastingEffect,
    total: f64,
    z_max: u32,
) -> Result<Option<Witness>> {
    // Walking z upward walks x downward; track the best larger step seen.
    let mut best: Option<(f64, f64)> = None;
    for z in 1..=z_max {
        let x = total / z as f64;
        let s = survival_lasting_steps(curve, eff, x, z)?;
        if let Some((x_large, s_large)) = best {
            if s < s_large {
                return Ok(Some(Witness {
                    x_small: x,
                    s_small: s,
                    x_large,
                    s_large,
                }));
            }
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((x, s));
        }
    }
    Ok(None)
}
