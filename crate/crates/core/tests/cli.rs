use std::path::Path;
use std::process::Command;

use causal_rdf::cli::{parse_config, run_config, RunArgs, CSV_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_causal-rdf");

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn config(source: &str, mode: &str, solver: &str, out: &Path) -> String {
    format!(
        r#"{{"schema_version": 1, "horizon": 2, "source": {source},
            "distortion": "hamming", "mode": "{mode}", "solver": {solver},
            "output": {{"format": "csv", "path": {:?}}}}}"#,
        out.display().to_string()
    )
}

const FAIR: &str = r#"{"iid": {"p": [0.5, 0.5]}}"#;
const MARKOV: &str =
    r#"{"markov": {"initial": [0.5, 0.5], "transition": [[0.7, 0.3], [0.3, 0.7]]}}"#;

#[test]
fn zero_multiplier_gives_zero_rate_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let cfg = write(
        dir.path(),
        "c.json",
        &config(MARKOV, "solve_s", r#"{"s": 0}"#, &out),
    );
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 2);
    let f: Vec<_> = lines[1].split(',').collect();
    assert_eq!((f[2], f[3], f[5]), ("0", "0", "true"));
}

#[test]
fn curve_mode_writes_a_checked_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let s: Vec<String> = (1..=20).map(|k| format!("{}", -0.25 * k as f64)).collect();
    let solver = format!(r#"{{"s_values": [{}]}}"#, s.join(","));
    let mut text = config(FAIR, "curve", &solver, &out);
    text = text.replace(r#""horizon": 2"#, r#""horizon": 1"#);
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&["run", cfg.to_str().unwrap(), "--check", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    for name in [
        "dominance",
        "monotonicity",
        "convexity",
        "mc_residual_1",
        "stationarity",
    ] {
        assert!(err.contains(&format!("PASS {name}")), "{name}: {err}");
    }
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 21);
}

#[test]
fn short_kernel_row_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = r#"{"general": {"kernels": [[[0.5, 0.5]], [[0.5, 0.5], [0.6, 0.3]]]}}"#;
    let cfg = write(
        dir.path(),
        "c.json",
        &config(src, "solve_s", r#"{"s": -1}"#, &dir.path().join("o.csv")),
    );
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("stage 1 history 1"), "{err}");
    assert!(err.contains("0.9"), "{err}");
}

#[test]
fn schema_violation_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(
        FAIR,
        "solve_s",
        r#"{"s": "low"}"#,
        &dir.path().join("o.csv"),
    );
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("solver.s"), "{err}");
    let (code, _, _) = run(&["run", "/nonexistent/config.json"]);
    assert_eq!(code, 2);
}

#[test]
fn infeasible_target_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(
        FAIR,
        "target_d",
        r#"{"d_target": 0.1}"#,
        &dir.path().join("o.csv"),
    )
    .replace(
        r#""hamming""#,
        r#"{"single_letter": {"table": [[0.5, 1], [1, 0.5]]}}"#,
    );
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn non_convergence_exits_three_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let text = config(
        MARKOV,
        "solve_s",
        r#"{"s": -2, "max_sweeps": 1, "fp_tol": 1e-15}"#,
        &out,
    );
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, _) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(std::fs::read_to_string(&out).unwrap().contains(",false,"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let other = dir.path().join("other.csv");
    let text = config(FAIR, "curve", r#"{"s": -2, "s_values": [-1, -2]}"#, &out);
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--mode",
        "solve_s",
        "--out",
        other.to_str().unwrap(),
        "--units",
        "bits",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(!out.exists());
    let nats = dir.path().join("nats.csv");
    run(&[
        "run",
        cfg.to_str().unwrap(),
        "--mode",
        "solve_s",
        "--out",
        nats.to_str().unwrap(),
    ]);
    let row = |p: &Path| -> Vec<f64> {
        let t = std::fs::read_to_string(p).unwrap();
        t.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .take(4)
            .map(|v| v.parse().unwrap())
            .collect()
    };
    let (b, n) = (row(&other), row(&nats));
    assert_eq!(b.len(), 4);
    assert_eq!(b[1], n[1]);
    assert!((b[2] - n[2] / std::f64::consts::LN_2).abs() < 1e-11);
    assert!((b[3] - n[3] / std::f64::consts::LN_2).abs() < 1e-11);
}

#[test]
fn horizon_sweep_has_a_horizon_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let text = config(
        MARKOV,
        "horizon_sweep",
        r#"{"d_target": 0.1, "horizons": [1, 2, 3]}"#,
        &out,
    );
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let t = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = t.lines().collect();
    assert_eq!(lines[0], format!("horizon,{CSV_HEADER}"));
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,"));
}

#[test]
fn json_report_carries_checks_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let text = config(
        MARKOV,
        "verify",
        r#"{"s": -1.5, "s_values": [-1, -1.5, -2]}"#,
        &out,
    )
    .replace(r#""format": "csv""#, r#""format": "json""#);
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["mode"], "verify");
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 8);
    assert!(checks
        .iter()
        .all(|c| c["passed"] == true && c["tolerance"].is_number()));
    assert!(v["timing"]["solve"].is_number());
    assert_eq!(v["config"]["solver"]["s"], -1.5);
}

#[test]
fn reloaded_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let text = config(MARKOV, "curve", r#"{"s_values": [-0.3, -1.7, -3.1]}"#, &a);
    let cfg = parse_config(&text).unwrap();
    let again = parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(cfg, again);
    let args = |p: &Path| RunArgs {
        config: "unused".into(),
        mode: None,
        out: Some(p.to_path_buf()),
        check: false,
        seed: 0,
        units: None,
    };
    assert!(run_config(cfg, &args(&a)).1.is_none());
    assert!(run_config(again, &args(&b)).1.is_none());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
