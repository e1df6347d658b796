//! Seeded Monte-Carlo cohorts and simulated A/B estimation of `p(x)`.
//!
//! Each surviving user faces every increase independently: in direct mode
//! they stay with probability `p_i(x)`, in ARUM mode they draw fresh noise
//! `Y ~ F` and stay while `Y < u0 - c(x) - eps d(accumulated)`. Departure is
//! permanent.

mod isotonic;
pub mod rng;
mod wilson;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use isotonic::{monotone_fit, pav_non_increasing};
pub use wilson::{wilson_interval, Interval, Z_95};

use crate::lasting::LastingEffect;
use crate::optimizer::{optimize_sweep, OptimizationResult, RevenueFamily, RevenueModel, Schedule, SweepGrid};
use crate::retention::{ArumSpec, RetentionCurve};
use crate::{Error, Result};
use rng::CounterRng;

/// Arms whose 95% interval is wider than this trigger the wide-CI warning.
pub const WIDE_CI_WIDTH: f64 = 0.05;
pub const MIN_ARM_SIZE: u64 = 30;

#[derive(Debug, Clone, PartialEq)]
pub enum CohortModel {
    Direct {
        curve: RetentionCurve,
        lasting: Option<LastingEffect>,
    },
    Arum {
        arum: ArumSpec,
        lasting: Option<LastingEffect>,
    },
}

impl CohortModel {
    pub fn direct(curve: RetentionCurve) -> Self {
        CohortModel::Direct { curve, lasting: None }
    }

    pub fn arum(arum: ArumSpec) -> Self {
        CohortModel::Arum { arum, lasting: None }
    }

    fn lasting(&self) -> LastingEffect {
        match self {
            CohortModel::Direct { lasting, .. } | CohortModel::Arum { lasting, .. } => {
                lasting.unwrap_or_else(LastingEffect::none)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Increments {
    Equal(Schedule),
    Explicit(Vec<f64>),
}

impl Increments {
    fn steps(&self) -> Vec<f64> {
        match self {
            Increments::Equal(s) => vec![s.x; s.z as usize],
            Increments::Explicit(v) => v.clone(),
        }
    }

    /// Inconvenience accumulated before increase `i` (1-based).
    fn accumulated_before(&self, steps: &[f64], i: usize) -> f64 {
        match self {
            Increments::Equal(s) => (i - 1) as f64 * s.x,
            Increments::Explicit(_) => steps[..i - 1].iter().sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub n_users: u64,
    pub seed: u64,
    pub model: CohortModel,
    pub increments: Increments,
    /// Per-user revenue used for the realized revenue column.
    pub revenue: RevenueFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Survivors after each increase; index 0 is the starting cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortResult {
    pub seed: u64,
    pub n_users: u64,
    pub increments: Vec<f64>,
    pub survivors_per_period: Vec<u64>,
    pub survival_fraction: Vec<f64>,
    pub ci_95: Vec<Interval>,
    /// `r(level_t) * survivors_t`, with `level_t` the inconvenience after `t` increases.
    pub realized_revenue: Vec<f64>,
}

impl CohortResult {
    pub fn final_fraction(&self) -> f64 {
        *self.survival_fraction.last().unwrap()
    }

    pub fn final_interval(&self) -> Interval {
        *self.ci_95.last().unwrap()
    }
}

/// Per-increase rule shared by all users.
enum StepRule {
    Probability(Vec<f64>),
    Threshold { arum: ArumSpec, thresholds: Vec<f64> },
}

impl StepRule {
    fn build(model: &CohortModel, increments: &Increments) -> Result<(Self, Vec<f64>)> {
        let steps = increments.steps();
        if steps.is_empty() {
            return Err(Error::param("schedule has no increases"));
        }
        if let Some(&bad) = steps.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::param(format!("increments must be positive, got {bad}")));
        }
        let eff = model.lasting();
        eff.validate()?;
        let rule = match model {
            CohortModel::Direct { curve, .. } => {
                let mut probs = Vec::with_capacity(steps.len());
                for (k, &x) in steps.iter().enumerate() {
                    let raw = curve.eval(x)? - eff.deficit(increments.accumulated_before(&steps, k + 1));
                    probs.push(raw.max(0.0));
                }
                StepRule::Probability(probs)
            }
            CohortModel::Arum { arum, .. } => {
                arum.validate()?;
                let thresholds = steps
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| arum.threshold(x) - eff.deficit(increments.accumulated_before(&steps, k + 1)))
                    .collect();
                StepRule::Threshold {
                    arum: *arum,
                    thresholds,
                }
            }
        };
        Ok((rule, steps))
    }

    fn len(&self) -> usize {
        match self {
            StepRule::Probability(p) => p.len(),
            StepRule::Threshold { thresholds, .. } => thresholds.len(),
        }
    }

    /// Number of increases user `user` sits through before leaving.
    fn survived(&self, rng: &CounterRng, user: u64) -> usize {
        match self {
            StepRule::Probability(probs) => probs
                .iter()
                .enumerate()
                .position(|(k, &p)| rng.uniform(user, k as u64 + 1, 0) >= p)
                .unwrap_or(probs.len()),
            StepRule::Threshold { arum, thresholds } => thresholds
                .iter()
                .enumerate()
                .position(|(k, &t)| {
                    let period = k as u64 + 1;
                    let y = arum
                        .noise
                        .sample(rng.uniform(user, period, 0), rng.uniform(user, period, 1));
                    !(y < t)
                })
                .unwrap_or(thresholds.len()),
        }
    }
}

/// Expected surviving fraction after each increase (index 0 is 1): running
/// products of the per-increase retention probabilities.
pub fn expected_survival(model: &CohortModel, increments: &Increments) -> Result<Vec<f64>> {
    let (rule, _) = StepRule::build(model, increments)?;
    let probs: Vec<f64> = match rule {
        StepRule::Probability(p) => p,
        StepRule::Threshold { arum, thresholds } => thresholds.iter().map(|&t| arum.noise.cdf(t)).collect(),
    };
    let mut out = Vec::with_capacity(probs.len() + 1);
    out.push(1.0);
    let mut s = 1.0;
    for p in probs {
        s *= p;
        out.push(s);
    }
    Ok(out)
}

fn histogram(rule: &StepRule, rng: &CounterRng, n_users: u64, exec: Execution) -> Vec<u64> {
    let bins = rule.len() + 1;
    match exec {
        Execution::Sequential => {
            let mut h = vec![0u64; bins];
            for u in 0..n_users {
                h[rule.survived(rng, u)] += 1;
            }
            h
        }
        Execution::Parallel => (0..n_users)
            .into_par_iter()
            .fold(
                || vec![0u64; bins],
                |mut h, u| {
                    h[rule.survived(rng, u)] += 1;
                    h
                },
            )
            .reduce(
                || vec![0u64; bins],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            ),
    }
}

fn run_cohort(cfg: &CohortConfig, rng: &CounterRng, exec: Execution) -> Result<CohortResult> {
    if cfg.n_users == 0 {
        return Err(Error::param("n_users must be positive"));
    }
    let (rule, steps) = StepRule::build(&cfg.model, &cfg.increments)?;
    let hist = histogram(&rule, rng, cfg.n_users, exec);

    // survivors[t] = users who sat through at least t increases.
    let mut survivors = vec![0u64; hist.len()];
    let mut acc = 0;
    for t in (0..hist.len()).rev() {
        acc += hist[t];
        survivors[t] = acc;
    }
    let n = cfg.n_users as f64;
    let mut level = 0.0;
    let mut realized = Vec::with_capacity(survivors.len());
    for (t, &s) in survivors.iter().enumerate() {
        if t > 0 {
            level += steps[t - 1];
        }
        realized.push(cfg.revenue.eval(level) * s as f64);
    }
    Ok(CohortResult {
        seed: cfg.seed,
        n_users: cfg.n_users,
        increments: steps,
        survival_fraction: survivors.iter().map(|&s| s as f64 / n).collect(),
        ci_95: survivors
            .iter()
            .map(|&s| wilson_interval(s, cfg.n_users, Z_95))
            .collect(),
        survivors_per_period: survivors,
        realized_revenue: realized,
    })
}

/// Replays a cohort under `cfg`; users are processed in parallel.
pub fn simulate_schedule(cfg: &CohortConfig) -> Result<CohortResult> {
    simulate_schedule_with(cfg, Execution::Parallel)
}

pub fn simulate_schedule_with(cfg: &CohortConfig, exec: Execution) -> Result<CohortResult> {
    run_cohort(cfg, &CounterRng::new(cfg.seed), exec)
}

/// Result of a simulated A/B test: one single-increase arm per sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbEstimate {
    pub seed: u64,
    pub n_per_arm: u64,
    pub x_samples: Vec<f64>,
    pub stayed: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub ci_95: Vec<Interval>,
    pub fitted: RetentionCurve,
    /// Some arm's interval is wider than [`WIDE_CI_WIDTH`].
    pub wide_ci: bool,
}

/// `max * i / arms` for `i = 1..=arms`.
pub fn arm_points(max: f64, arms: usize) -> Vec<f64> {
    (1..=arms).map(|i| max * i as f64 / arms as f64).collect()
}

/// Estimates `p` at each sample point from an arm of `n_per_arm` users and
/// fits a monotone curve through the estimates.
///
/// Arm `k` draws from its own stream of the seed, so adding arms leaves the
/// existing ones untouched.
pub fn estimate_p(model: &CohortModel, x_samples: &[f64], n_per_arm: u64, seed: u64) -> Result<AbEstimate> {
    estimate_p_with(model, x_samples, n_per_arm, seed, Execution::Parallel)
}

pub fn estimate_p_with(
    model: &CohortModel,
    x_samples: &[f64],
    n_per_arm: u64,
    seed: u64,
    exec: Execution,
) -> Result<AbEstimate> {
    if x_samples.is_empty() {
        return Err(Error::param("A/B estimation needs at least one arm"));
    }
    if n_per_arm < MIN_ARM_SIZE {
        return Err(Error::param(format!(
            "arms need at least {MIN_ARM_SIZE} users, got {n_per_arm}"
        )));
    }
    let root = CounterRng::new(seed);
    let mut stayed = Vec::with_capacity(x_samples.len());
    for (k, &x) in x_samples.iter().enumerate() {
        let cfg = CohortConfig {
            n_users: n_per_arm,
            seed,
            model: model.clone(),
            increments: Increments::Explicit(vec![x]),
            revenue: RevenueFamily::Identity,
        };
        let res = run_cohort(&cfg, &root.stream(k as u64), exec)?;
        stayed.push(res.survivors_per_period[1]);
    }
    let p_hat: Vec<f64> = stayed.iter().map(|&s| s as f64 / n_per_arm as f64).collect();
    let ci_95: Vec<Interval> = stayed.iter().map(|&s| wilson_interval(s, n_per_arm, Z_95)).collect();
    let fitted = monotone_fit(x_samples, &p_hat)?;
    Ok(AbEstimate {
        seed,
        n_per_arm,
        x_samples: x_samples.to_vec(),
        stayed,
        wide_ci: ci_95.iter().any(|i| i.width() > WIDE_CI_WIDTH),
        p_hat,
        ci_95,
        fitted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Estimate {
        model: CohortModel,
        x_samples: Vec<f64>,
        n_per_arm: u64,
        seed: u64,
    },
    /// Skips estimation and optimizes a known curve.
    Known(RetentionCurve),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndToEnd {
    pub estimate: Option<AbEstimate>,
    pub result: OptimizationResult,
    pub wide_ci_warning: bool,
}

/// Estimates `p` (unless it is known) and runs the sweep on the result.
///
/// Without an explicit grid the default grid of the curve is used; an
/// explicit grid is clipped to the curve's domain.
pub fn end_to_end_estimate_and_optimize(
    source: &CurveSource,
    rev: &RevenueModel,
    grid: Option<SweepGrid>,
    grid_step: f64,
    z_max: u32,
) -> Result<EndToEnd> {
    let (estimate, curve) = match source {
        CurveSource::Estimate {
            model,
            x_samples,
            n_per_arm,
            seed,
        } => {
            let est = estimate_p(model, x_samples, *n_per_arm, *seed)?;
            let curve = est.fitted.clone();
            (Some(est), curve)
        }
        CurveSource::Known(curve) => (None, curve.clone()),
    };
    let grid = match grid {
        Some(g) => SweepGrid::new(g.min, g.max.min(curve.domain_max()), g.step)?,
        None => SweepGrid::default_for(&curve, grid_step)?,
    };
    let result = optimize_sweep(&curve, rev, &grid.points(), z_max)?;
    Ok(EndToEnd {
        wide_ci_warning: estimate.as_ref().is_some_and(|e| e.wide_ci),
        estimate,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasting::{survival_lasting_steps, Decay};
    use crate::retention::{survival_s, Cost, Noise};

    fn cohort(model: CohortModel, x: f64, z: u32, n: u64, seed: u64) -> CohortConfig {
        CohortConfig {
            n_users: n,
            seed,
            model,
            increments: Increments::Equal(Schedule::new(x, z).unwrap()),
            revenue: RevenueFamily::Identity,
        }
    }

    fn within_3sd(observed: f64, p: f64, n: u64) -> bool {
        (observed - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn certain_retention_keeps_everyone() {
        let flat = RetentionCurve::tabulated(vec![0.0, 10.0], vec![1.0, 1.0]).unwrap();
        let r = simulate_schedule(&cohort(CohortModel::direct(flat), 0.7, 5, 1000, 3)).unwrap();
        assert!(r.survivors_per_period.iter().all(|&s| s == 1000));
        assert_eq!(r.survivors_per_period.len(), 6);
    }

    #[test]
    fn matches_closed_form_survival() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let r = simulate_schedule(&cohort(CohortModel::direct(c.clone()), 0.5, 2, 100_000, 11)).unwrap();
        assert!(within_3sd(
            r.final_fraction(),
            survival_s(&c, 1.0, 0.5).unwrap(),
            100_000
        ));
    }

    #[test]
    fn arum_single_step_is_a_coin_flip() {
        let a = ArumSpec::new(1.0, Cost::Linear { slope: 1.0 }, Noise::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        let r = simulate_schedule(&cohort(CohortModel::arum(a), 1.0, 1, 100_000, 5)).unwrap();
        assert!(within_3sd(r.final_fraction(), 0.5, 100_000));
    }

    #[test]
    fn lasting_effect_matches_product() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let eff = LastingEffect::new(0.1, Decay::Linear).unwrap();
        let model = CohortModel::Direct {
            curve: c.clone(),
            lasting: Some(eff),
        };
        let r = simulate_schedule(&cohort(model, 0.25, 4, 100_000, 8)).unwrap();
        let want = survival_lasting_steps(&c, &eff, 0.25, 4).unwrap();
        assert!(within_3sd(r.final_fraction(), want, 100_000));
    }

    #[test]
    fn result_invariants_and_determinism() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let cfg = cohort(CohortModel::direct(c), 0.3, 6, 20_000, 99);
        let a = simulate_schedule_with(&cfg, Execution::Parallel).unwrap();
        let b = simulate_schedule_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.survivors_per_period.windows(2).all(|w| w[1] <= w[0]));
        for (s, f) in a.survivors_per_period.iter().zip(&a.survival_fraction) {
            assert_eq!(*f, *s as f64 / 20_000.0);
        }
        assert_eq!(a.realized_revenue[0], 0.0);
        assert_eq!(a.realized_revenue[2], 0.6 * a.survivors_per_period[2] as f64);
    }

    #[test]
    fn explicit_increments() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let cfg = CohortConfig {
            n_users: 50_000,
            seed: 1,
            model: CohortModel::direct(c.clone()),
            increments: Increments::Explicit(vec![0.2, 0.5, 0.3]),
            revenue: RevenueFamily::Identity,
        };
        let r = simulate_schedule(&cfg).unwrap();
        let want = c.eval(0.2).unwrap() * c.eval(0.5).unwrap() * c.eval(0.3).unwrap();
        assert!(within_3sd(r.final_fraction(), want, 50_000));
        assert_eq!(r.increments, vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn zero_users_is_an_error() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        assert!(matches!(
            simulate_schedule(&cohort(CohortModel::direct(c), 0.5, 2, 0, 1)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn estimate_examples() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let est = estimate_p(&CohortModel::direct(c.clone()), &[0.5], 10_000, 17).unwrap();
        assert!(est.ci_95[0].contains(c.eval(0.5).unwrap()), "{:?}", est.ci_95[0]);
        assert!(!est.wide_ci);

        let flat = RetentionCurve::tabulated(vec![0.0, 10.0], vec![1.0, 1.0]).unwrap();
        let est = estimate_p(&CohortModel::direct(flat), &[1.0, 2.0, 3.0], 500, 4).unwrap();
        assert!(est.p_hat.iter().all(|&p| p == 1.0));
        assert!(est.ci_95.iter().all(|i| i.hi == 1.0 && i.lo < 1.0));

        assert!(estimate_p(&CohortModel::direct(c.clone()), &[], 100, 1).is_err());
        assert!(estimate_p(&CohortModel::direct(c), &[0.5], 29, 1).is_err());
    }

    #[test]
    fn adding_arms_keeps_earlier_arms() {
        let c = RetentionCurve::exp_power(2.0).unwrap();
        let m = CohortModel::direct(c);
        let a = estimate_p(&m, &[0.3, 0.6], 2000, 9).unwrap();
        let b = estimate_p(&m, &[0.3, 0.6, 0.9], 2000, 9).unwrap();
        assert_eq!(a.stayed[..], b.stayed[..2]);
    }

    #[test]
    fn known_curve_bypasses_estimation() {
        let t = RetentionCurve::tabulated(vec![0.0, 0.5, 1.0, 2.0], vec![1.0, 0.8, 0.4, 0.05]).unwrap();
        let rev = RevenueModel::identity(0.9).unwrap();
        let e2e = end_to_end_estimate_and_optimize(&CurveSource::Known(t.clone()), &rev, None, 0.001, 10_000).unwrap();
        let grid = SweepGrid::default_for(&t, 0.001).unwrap().points();
        let direct = optimize_sweep(&t, &rev, &grid, 10_000).unwrap();
        assert_eq!(e2e.result, direct);
        assert!(e2e.estimate.is_none() && !e2e.wide_ci_warning);
    }

    #[test]
    fn tiny_arms_raise_the_warning() {
        let src = CurveSource::Estimate {
            model: CohortModel::direct(RetentionCurve::exp_power(2.0).unwrap()),
            x_samples: arm_points(2.0, 8),
            n_per_arm: 30,
            seed: 2,
        };
        let rev = RevenueModel::identity(0.9).unwrap();
        let e2e = end_to_end_estimate_and_optimize(&src, &rev, None, 0.01, 10_000).unwrap();
        assert!(e2e.wide_ci_warning);
    }
}
