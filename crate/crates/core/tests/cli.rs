use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaptrev_core::cli::{ClassifyReport, CohortReport, OptimizeReport, RateSweepReport};
use adaptrev_core::simulator::AbEstimate;
use adaptrev_core::CurvatureKind;
use tempfile::TempDir;

const GAUSSIAN: &str = r#"{"curve":{"family":"exp_power","k":2},"revenue":{"r":{"family":"identity"},"delta":0.9},
    "grid":{"min":0.001,"max":2,"step":0.001}}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, json: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, json).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn adaptrev(cmd: &str, config: &Path, out: Option<&Path>, extra: &[&str]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_adaptrev"));
    c.arg(cmd).arg("--config").arg(config);
    if let Some(o) = out {
        c.arg("--out").arg(o);
    }
    c.args(extra).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn classify_reports_the_class_in_the_exit_code() {
    let run = Run::new();
    for (json, want, exit) in [
        (r#"{"curve":{"family":"exp_power","k":2}}"#, "LogConcave", 0),
        (r#"{"curve":{"family":"inverse_power","k":2}}"#, "LogConvex", 10),
        (
            r#"{"curve":{"family":"scaled_exp_power","scale":0.5,"k":2}}"#,
            "DiscontinuousLogConcaveTail",
            12,
        ),
    ] {
        let cfg = run.config("c.json", json);
        let o = adaptrev("classify", &cfg, None, &[]);
        assert_eq!(code(&o), exit, "{json}");
        assert!(stdout(&o).starts_with(want), "{}", stdout(&o));
    }
}

#[test]
fn linear_log_is_concave_with_near_zero_evidence() {
    let run = Run::new();
    let cfg = run.config("c.json", r#"{"curve":{"family":"exp_power","k":1}}"#);
    let out = run.out("o");
    let o = adaptrev("classify", &cfg, Some(&out), &[]);
    assert_eq!(code(&o), 0);
    let r: ClassifyReport = json(&out.join("classification.json"));
    assert_eq!(r.classification.kind, CurvatureKind::LogConcave);
    assert!(r.evidence.abs() < 1e-6, "{}", r.evidence);
}

#[test]
fn config_errors_name_the_field() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"grid":{"stpe":0.1}}"#,
    );
    let o = adaptrev("optimize", &cfg, None, &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));
    assert!(stderr(&o).contains("stpe"), "{}", stderr(&o));

    let o = adaptrev("optimize", &run.out("missing.json"), None, &[]);
    assert_eq!(code(&o), 2);

    let o = Command::new(env!("CARGO_BIN_EXE_adaptrev"))
        .arg("optimize")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn optimize_gaussian() {
    let run = Run::new();
    let cfg = run.config("c.json", GAUSSIAN);
    let out = run.out("o");
    let o = adaptrev("optimize", &cfg, Some(&out), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: OptimizeReport = json(&out.join("result.json"));
    assert!((0.190..=0.200).contains(&r.result.best.x));
    assert_eq!(r.result.best.z, 26);
    assert!(!r.result.one_step_shortcut_used);
    assert_eq!(r.seed, None);

    let rows = csv_rows(&out.join("trace.csv"));
    assert_eq!(rows[0], ["x", "z_star", "A", "pi"]);
    assert_eq!(rows.len() - 1, r.grid.points().len());
    assert_eq!(rows.len() - 1, 2000);
    assert_eq!(rows[195][..2], ["0.195".to_string(), "26".to_string()]);
}

#[test]
fn log_convex_takes_the_shortcut() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":0.5},"revenue":{"r":{"family":"identity"},"delta":0.9},"grid":{"max":20}}"#,
    );
    let out = run.out("o");
    let o = adaptrev("optimize", &cfg, Some(&out), &["--grid-step", "0.01"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: OptimizeReport = json(&out.join("result.json"));
    assert!(r.result.one_step_shortcut_used);
    assert!((r.result.best.x - 4.0).abs() < 1e-4);
    assert!(r.result.one_step_audit.unwrap().passed());
    assert_eq!(r.grid.step, 0.01);
}

#[test]
fn infeasible_grid_is_a_parameter_error() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"revenue":{"r":{"family":"identity"},"delta":0.9},"grid":{"step":-1}}"#,
    );
    assert_eq!(code(&adaptrev("optimize", &cfg, Some(&run.out("o")), &[])), 3);
}

#[test]
fn capped_optimum_is_a_soft_failure() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"revenue":{"r":{"family":"identity"},"delta":0.9},
            "grid":{"min":0.01,"max":0.05,"step":0.01},"z_max":5}"#,
    );
    let o = adaptrev("optimize", &cfg, Some(&run.out("a")), &[]);
    assert_eq!(code(&o), 4);
    assert!(run.out("a").join("result.json").exists());
    let o = adaptrev("optimize", &cfg, Some(&run.out("b")), &["--allow-cap"]);
    assert_eq!(code(&o), 0);
    let r: OptimizeReport = json(&run.out("b").join("result.json"));
    assert!(r.result.best_capped);
}

const SIMULATE: &str = r#"{"curve":{"family":"exp_power","k":2},
    "simulation":{"n_users":1000,"seed":5,"schedule":{"x":0.3,"z":8}}}"#;

#[test]
fn simulate_is_reproducible_and_consistent() {
    let run = Run::new();
    let cfg = run.config("c.json", SIMULATE);
    for name in ["a", "b"] {
        assert_eq!(code(&adaptrev("simulate", &cfg, Some(&run.out(name)), &[])), 0);
    }
    for f in ["cohort.csv", "cohort_summary.json"] {
        assert_eq!(
            std::fs::read(run.out("a").join(f)).unwrap(),
            std::fs::read(run.out("b").join(f)).unwrap()
        );
    }
    let rows = csv_rows(&run.out("a").join("cohort.csv"));
    assert_eq!(rows.len(), 1 + 9);
    let survivors: Vec<u64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(survivors.windows(2).all(|w| w[1] <= w[0]));
    let summary: CohortReport = json(&run.out("a").join("cohort_summary.json"));
    assert_eq!(summary.seed, 5);
    let last: f64 = rows.last().unwrap()[4].parse().unwrap();
    assert_eq!(last, summary.final_fraction);
    assert_eq!(summary.cohort.survivors_per_period, survivors);

    let o = adaptrev("simulate", &cfg, Some(&run.out("c")), &["--seed", "6"]);
    let other: CohortReport = json(&run.out("c").join("cohort_summary.json"));
    assert_eq!(code(&o), 0);
    assert_eq!(other.seed, 6);
}

#[test]
fn simulate_rejects_an_empty_cohort() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"simulation":{"n_users":0,"seed":1,"schedule":{"x":0.3,"z":2}}}"#,
    );
    assert_eq!(code(&adaptrev("simulate", &cfg, Some(&run.out("o")), &[])), 3);
}

#[test]
fn simulate_arum_with_explicit_increments() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"arum":{"u0":1,"cost":{"kind":"linear","slope":1},"noise":{"kind":"normal","mean":0,"sd":1}},
            "simulation":{"n_users":2000,"seed":3,"increments":[0.2,0.3]},"output":{"formats":["json"]}}"#,
    );
    let out = run.out("o");
    assert_eq!(code(&adaptrev("simulate", &cfg, Some(&out), &[])), 0);
    assert!(!out.join("cohort.csv").exists());
    let r: CohortReport = json(&out.join("cohort_summary.json"));
    assert_eq!(r.cohort.increments, vec![0.2, 0.3]);
}

#[test]
fn estimate_writes_arms_and_a_monotone_fit() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"simulation":{"seed":4,"arms":12,"arm_max":2,"n_per_arm":2000}}"#,
    );
    let out = run.out("o");
    let o = adaptrev("estimate", &cfg, Some(&out), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(csv_rows(&out.join("arms.csv")).len(), 1 + 12);
    let est: AbEstimate = json(&out.join("fitted_curve.json"));
    assert_eq!(est.seed, 4);
    let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
    let p: Vec<f64> = xs.iter().map(|&x| est.fitted.eval(x).unwrap()).collect();
    assert!(p.windows(2).all(|w| w[1] <= w[0]));
    assert!(!out.join("result.json").exists());
}

#[test]
fn estimate_chain_optimizes_the_fit() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"revenue":{"r":{"family":"identity"},"delta":0.9},
            "simulation":{"seed":12,"arms":64,"arm_max":2,"n_per_arm":100000}}"#,
    );
    let out = run.out("o");
    let o = adaptrev("estimate", &cfg, Some(&out), &["--chain"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: OptimizeReport = json(&out.join("result.json"));
    assert_eq!(r.seed, Some(12));
    assert!((0.15..=0.25).contains(&r.result.best.x), "{:?}", r.result.best);
    assert!(r.result.best.z.abs_diff(26) <= 5);
}

#[test]
fn estimate_needs_arms() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"simulation":{"seed":1,"arms":0,"n_per_arm":100}}"#,
    );
    assert_eq!(code(&adaptrev("estimate", &cfg, Some(&run.out("o")), &[])), 3);
}

#[test]
fn tiny_arms_warn() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"simulation":{"seed":1,"arms":4,"arm_max":2,"n_per_arm":30}}"#,
    );
    let o = adaptrev("estimate", &cfg, Some(&run.out("o")), &[]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn sweep_rate_emits_pairs() {
    let run = Run::new();
    let cfg = run.config(
        "c.json",
        r#"{"curve":{"family":"exp_power","k":2},"clock":{"family":"constant","c":1},"rate_sweep":{"total":2,"points":64}}"#,
    );
    let out = run.out("o");
    assert_eq!(code(&adaptrev("sweep-rate", &cfg, Some(&out), &[])), 0);
    let rows = csv_rows(&out.join("rate_sweep.csv"));
    assert_eq!(rows[0], ["rate", "x", "survival"]);
    assert_eq!(rows.len(), 65);
    let r: RateSweepReport = json(&out.join("rate_sweep.json"));
    assert!(r.inelasticity.inelastic);
    assert!(r.points.windows(2).all(|w| w[1].survival <= w[0].survival));

    let elastic = run.config(
        "e.json",
        r#"{"curve":{"family":"exp_power","k":2},"clock":{"family":"power","c":1,"a":2},"rate_sweep":{"total":2}}"#,
    );
    assert_eq!(code(&adaptrev("sweep-rate", &elastic, Some(&run.out("e")), &[])), 3);
}

#[test]
fn json_outputs_round_trip() {
    let run = Run::new();
    let cfg = run.config("c.json", GAUSSIAN);
    let out = run.out("o");
    adaptrev("optimize", &cfg, Some(&out), &[]);
    let text = std::fs::read_to_string(out.join("result.json")).unwrap();
    let r: OptimizeReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);

    let cfg = run.config("s.json", SIMULATE);
    adaptrev("simulate", &cfg, Some(&out), &[]);
    let text = std::fs::read_to_string(out.join("cohort_summary.json")).unwrap();
    let r: CohortReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
}
