//! The `adaptrev` command line: `adaptrev <command> --config run.json`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 domain or
//! parameter error, 4 the optimum hit `z_max` (unless `--allow-cap`).
//! `classify` reports the class through its exit code: 0 log-concave,
//! 10 log-convex, 11 neither, 12 discontinuous with a log-concave tail.

mod config;
mod output;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub use config::{Format, GridSpec, OutputSpec, RateSweepSpec, RunConfig, SimulationSpec, StepSpec, Truth};
pub use output::{fmt_g, ClassifyReport, CohortReport, OptimizeReport, RateSweepReport};

use crate::adaptation::{is_inelastic, rate_survival_curve};
use crate::optimizer::{optimize, OptimizationResult, SweepGrid, DEFAULT_GRID_STEP};
use crate::retention::{classify, CurvatureKind, RetentionCurve};
use crate::search::log_space;
use crate::simulator::{
    arm_points, end_to_end_estimate_and_optimize, estimate_p, expected_survival, simulate_schedule, CohortConfig,
    CohortModel, CurveSource, Increments,
};
use crate::{Error, Result, Schedule};
use output::{arms_csv, cohort_csv, rate_csv, to_json, trace_csv, write_file};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_CAPPED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "adaptrev",
    version,
    about = "Revenue-maximizing schedules for adapting users"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the curvature of ln p.
    Classify(Flags),
    /// Find the best step size and number of steps.
    Optimize(Flags),
    /// Simulate a cohort under a schedule.
    Simulate(Flags),
    /// Estimate p from simulated A/B arms.
    Estimate(Flags),
    /// Survival as a function of the average rate of increase.
    SweepRate(Flags),
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `grid.step`.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Do not fail when the optimum hits `z_max`.
    #[arg(long)]
    pub allow_cap: bool,
    /// Optimize on the estimated curve (`estimate` only).
    #[arg(long)]
    pub chain: bool,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Capped { .. } => EXIT_CAPPED,
        Error::Io(_) => EXIT_IO,
        Error::Domain(_)
        | Error::Parameter(_)
        | Error::Classification(_)
        | Error::Range { .. }
        | Error::InfiniteRate => EXIT_DOMAIN,
    }
}

pub fn classify_exit_code(kind: CurvatureKind) -> i32 {
    match kind {
        CurvatureKind::LogConcave => 0,
        CurvatureKind::LogConvex => 10,
        CurvatureKind::Neither => 11,
        CurvatureKind::DiscontinuousLogConcaveTail => 12,
    }
}

struct Context {
    cfg: RunConfig,
    flags: Flags,
}

impl Context {
    fn load(flags: &Flags) -> Result<Self> {
        let mut cfg = RunConfig::load(&flags.config)?;
        if let Some(dir) = &flags.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(seed) = flags.seed {
            cfg.simulation.seed = Some(seed);
        }
        if let Some(step) = flags.grid_step {
            cfg.grid.step = Some(step);
        }
        cfg.simulation.chain |= flags.chain;
        Ok(Context {
            cfg,
            flags: flags.clone(),
        })
    }

    fn write(&self, format: Format, name: &str, contents: &str) -> Result<()> {
        if self.cfg.output.wants(format) {
            write_file(&self.cfg.output.dir, name, contents)?;
        }
        Ok(())
    }

    fn grid_step(&self) -> f64 {
        self.cfg.grid.step.unwrap_or(DEFAULT_GRID_STEP)
    }

    /// Config grid with missing ends filled from the curve's default grid.
    fn grid_for(&self, curve: &RetentionCurve) -> Result<SweepGrid> {
        let step = self.grid_step();
        let g = &self.cfg.grid;
        let max = match g.max {
            Some(m) => m.min(curve.domain_max()),
            None => SweepGrid::default_for(curve, step)?.max,
        };
        SweepGrid::new(g.min.unwrap_or(step), max, step)
    }

    /// The configured seed, or a fresh one from the clock. Either way it is
    /// echoed in the outputs.
    fn seed(&self) -> u64 {
        self.cfg.simulation.seed.unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0)
        })
    }

    fn model(&self) -> CohortModel {
        match self.cfg.truth() {
            Truth::Curve(curve) => CohortModel::Direct {
                curve,
                lasting: self.cfg.lasting,
            },
            Truth::Arum(arum) => CohortModel::Arum {
                arum,
                lasting: self.cfg.lasting,
            },
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Classify(f) => cmd_classify(&Context::load(f)?),
        Command::Optimize(f) => cmd_optimize(&Context::load(f)?),
        Command::Simulate(f) => cmd_simulate(&Context::load(f)?),
        Command::Estimate(f) => cmd_estimate(&Context::load(f)?),
        Command::SweepRate(f) => cmd_sweep_rate(&Context::load(f)?),
    }
}

fn cmd_classify(ctx: &Context) -> Result<i32> {
    let curve = ctx.cfg.truth().curve()?;
    let class = classify(&curve)?;
    println!(
        "{} (evidence {}, {} grid points, tol {})",
        class.kind,
        fmt_g(class.evidence()),
        class.grid_points,
        fmt_g(class.tol)
    );
    let report = ClassifyReport {
        curve,
        classification: class,
        evidence: class.evidence(),
    };
    if ctx.flags.out.is_some() {
        ctx.write(Format::Json, "classification.json", &to_json(&report))?;
    }
    Ok(classify_exit_code(class.kind))
}

fn finish_optimize(
    ctx: &Context,
    curve: RetentionCurve,
    grid: SweepGrid,
    result: OptimizationResult,
    seed: Option<u64>,
    mut warnings: Vec<String>,
) -> Result<i32> {
    if let Some(audit) = result.one_step_audit {
        if !audit.passed() {
            warnings.push(format!(
                "one-step dominance audit failed on {} of {} probes",
                audit.violations, audit.probes
            ));
        }
    }
    if result.capped_points > 0 {
        warnings.push(format!(
            "{} grid points reached z_max = {}",
            result.capped_points, ctx.cfg.z_max
        ));
    }
    let report = OptimizeReport {
        seed,
        classification: classify(&curve).ok(),
        curve,
        revenue: ctx.cfg.revenue()?,
        grid,
        z_max: ctx.cfg.z_max,
        result,
        warnings,
    };
    ctx.write(Format::Json, "result.json", &to_json(&report))?;
    ctx.write(Format::Csv, "trace.csv", &trace_csv(&report.result))?;

    let best = &report.result.best;
    println!(
        "x = {}  z = {}  A = {}  pi = {}{}",
        fmt_g(best.x),
        best.z,
        fmt_g(best.total),
        fmt_g(report.result.value),
        if report.result.one_step_shortcut_used {
            "  (one step)"
        } else {
            ""
        }
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.result.best_capped && !ctx.flags.allow_cap {
        return Err(Error::Capped { z_max: ctx.cfg.z_max });
    }
    Ok(EXIT_OK)
}

fn cmd_optimize(ctx: &Context) -> Result<i32> {
    let curve = ctx.cfg.truth().curve()?;
    let grid = ctx.grid_for(&curve)?;
    let mut warnings = Vec::new();
    if ctx.cfg.lasting.is_some_and(|l| l.epsilon > 0.0) {
        warnings.push("the lasting effect is ignored by optimize".to_string());
    }
    let rev = ctx.cfg.revenue()?;
    let result = optimize(&curve, &rev, &grid.points(), ctx.cfg.z_max)?;
    finish_optimize(ctx, curve, grid, result, None, warnings)
}

fn cmd_simulate(ctx: &Context) -> Result<i32> {
    let sim = &ctx.cfg.simulation;
    let increments = match (&sim.schedule, &sim.increments) {
        (Some(s), None) => Increments::Equal(Schedule::new(s.x, s.z)?),
        (None, Some(v)) => Increments::Explicit(v.clone()),
        _ => {
            return Err(Error::Config {
                path: "simulation.schedule".into(),
                message: "simulate needs `schedule` or `increments`".into(),
            })
        }
    };
    let n_users = sim.n_users.ok_or_else(|| Error::Config {
        path: "simulation.n_users".into(),
        message: "simulate needs `n_users`".into(),
    })?;
    let seed = ctx.seed();
    let cfg = CohortConfig {
        n_users,
        seed,
        model: ctx.model(),
        increments,
        revenue: ctx.cfg.revenue.map(|r| r.family()).unwrap_or_default(),
    };
    let cohort = simulate_schedule(&cfg)?;
    let expected = expected_survival(&cfg.model, &cfg.increments)?;
    ctx.write(Format::Csv, "cohort.csv", &cohort_csv(&cohort, &expected))?;
    let report = CohortReport {
        seed,
        final_fraction: cohort.final_fraction(),
        expected_final_fraction: *expected.last().unwrap(),
        cohort,
    };
    ctx.write(Format::Json, "cohort_summary.json", &to_json(&report))?;
    let ci = report.cohort.final_interval();
    println!(
        "seed = {seed}  survivors = {}  fraction = {} [{}, {}]  expected = {}",
        report.cohort.survivors_per_period.last().unwrap(),
        fmt_g(report.final_fraction),
        fmt_g(ci.lo),
        fmt_g(ci.hi),
        fmt_g(report.expected_final_fraction)
    );
    Ok(EXIT_OK)
}

fn cmd_estimate(ctx: &Context) -> Result<i32> {
    let sim = &ctx.cfg.simulation;
    let arms = sim.arms.unwrap_or(0);
    if arms == 0 {
        return Err(Error::Parameter("estimation needs at least one arm".into()));
    }
    let n_per_arm = sim.n_per_arm.ok_or_else(|| Error::Config {
        path: "simulation.n_per_arm".into(),
        message: "estimate needs `n_per_arm`".into(),
    })?;
    let truth = ctx.cfg.truth().curve()?;
    let arm_max = match sim.arm_max {
        Some(m) => m,
        None => SweepGrid::default_for(&truth, ctx.grid_step())?.max,
    };
    let x_samples = arm_points(arm_max, arms);
    let seed = ctx.seed();
    let model = ctx.model();

    let (est, chained) = if sim.chain {
        let rev = ctx.cfg.revenue()?;
        let source = CurveSource::Estimate {
            model,
            x_samples,
            n_per_arm,
            seed,
        };
        let explicit = (ctx.cfg.grid.min.is_some() || ctx.cfg.grid.max.is_some()).then(|| SweepGrid {
            min: ctx.cfg.grid.min.unwrap_or(ctx.grid_step()),
            max: ctx.cfg.grid.max.unwrap_or(f64::INFINITY),
            step: ctx.grid_step(),
        });
        let e2e = end_to_end_estimate_and_optimize(&source, &rev, explicit, ctx.grid_step(), ctx.cfg.z_max)?;
        (e2e.estimate.expect("estimated"), Some(e2e.result))
    } else {
        (estimate_p(&model, &x_samples, n_per_arm, seed)?, None)
    };
    ctx.write(Format::Csv, "arms.csv", &arms_csv(&est)?)?;
    ctx.write(Format::Json, "fitted_curve.json", &to_json(&est))?;
    println!(
        "seed = {seed}  arms = {arms}  n_per_arm = {n_per_arm}  widest CI = {}",
        fmt_g(est.ci_95.iter().map(|i| i.width()).fold(0.0, f64::max))
    );
    let mut warnings = Vec::new();
    if est.wide_ci {
        warnings.push("some arm has a 95% interval wider than 0.05; the estimate is coarse".to_string());
    }
    match chained {
        Some(result) => {
            let grid = ctx.grid_for(&est.fitted)?;
            finish_optimize(ctx, est.fitted, grid, result, Some(seed), warnings)
        }
        None => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_sweep_rate(ctx: &Context) -> Result<i32> {
    let spec = ctx.cfg.rate_sweep.ok_or_else(|| Error::Config {
        path: "rate_sweep".into(),
        message: "sweep-rate needs `rate_sweep.total`".into(),
    })?;
    let clock = ctx.cfg.clock.ok_or_else(|| Error::Config {
        path: "clock".into(),
        message: "sweep-rate needs a clock".into(),
    })?;
    let curve = ctx.cfg.truth().curve()?;
    let inelasticity = is_inelastic(&clock, &log_space(spec.total * 1e-6, spec.total * (1.0 - 1e-6), 64));
    let points = rate_survival_curve(&curve, &clock, spec.total, spec.points)?;
    ctx.write(Format::Csv, "rate_sweep.csv", &rate_csv(&points))?;
    let report = RateSweepReport {
        total: spec.total,
        clock,
        inelasticity,
        points,
    };
    ctx.write(Format::Json, "rate_sweep.json", &to_json(&report))?;
    println!("{} rate points for A = {}", report.points.len(), fmt_g(spec.total));
    Ok(EXIT_OK)
}
