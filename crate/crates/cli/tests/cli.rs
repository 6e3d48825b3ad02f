use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn skewprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewprod")).args(args).output().expect("binary runs")
}

fn run_bundled(name: &str, extra: &[&str]) -> (TempDir, Value) {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", name, "--out", out];
    args.extend_from_slice(extra);
    let o = skewprod(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    (dir, report)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MINIMAL: &str = r#"{
    "schema_version": 1,
    "name": "minimal",
    "theta": [{"cf": [0, 2], "tail": "periodic"}],
    "alpha": {"cf": [0, 1], "tail": "periodic"},
    "cocycles": {"u": {"generators": [{"winding": 1}]}},
    "windows": [10, 1000],
    "tasks": [{"task": "average", "cocycle": "u"}]
}"#;

fn scenario_file(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn trivial_has_generator_v() {
    let (_dir, r) = run_bundled("trivial", &[]);
    let c = &r["tasks"][0]["result"]["classification"];
    assert_eq!(c["m0"], 1);
    let generator = &c["fixed_point_generator"];
    assert_eq!(generator["level"], 1);
    assert_eq!(generator["witness"]["winding"], 0);
    assert_eq!(generator["witness"]["phase"], serde_json::json!([]));
}

#[test]
fn winding_one_decays_like_a_weyl_sum() {
    let (dir, r) = run_bundled("winding-one", &[]);
    assert_eq!(r["tasks"][0]["result"]["classification"]["weakly_ergodic"], true);
    let table = std::fs::read_to_string(dir.path().join("cesaro.csv")).unwrap();
    let rows: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    // M_n V has n distinct unimodular coefficients of size 1/n
    for (n, norm) in &rows {
        assert!((norm - 1.0 / n.sqrt()).abs() < 1e-12, "n={n}: {norm}");
    }
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn levels_table_lists_every_scanned_level() {
    let (dir, _) = run_bundled("winding-one", &[]);
    let table = std::fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "task,cocycle,level,verdict,certificate,measurable_excluded,residual");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.contains("not_coboundary,winding_obstruction,true")));
}

#[test]
fn reports_are_byte_reproducible() {
    let (a, _) = run_bundled("constant-coboundary", &["--threads", "1", "--seed", "5"]);
    let (b, _) = run_bundled("constant-coboundary", &["--threads", "4", "--seed", "5"]);
    for f in ["report.json", "cesaro.csv", "levels.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn seed_is_recorded() {
    let (_dir, r) = run_bundled("constant-coboundary", &["--seed", "42"]);
    assert_eq!(r["seed"], 42);
    let states = r["tasks"].as_array().unwrap().iter().find(|t| t["task"] == "states").unwrap();
    assert_eq!(states["provenance"]["seed"], 43);
}

#[test]
fn timings_live_outside_the_report() {
    let (dir, r) = run_bundled("lacunary", &[]);
    assert!(!r.to_string().contains("seconds"));
    let t: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("timings.json")).unwrap()).unwrap();
    assert_eq!(t["tasks"].as_array().unwrap().len(), 3);
}

#[test]
fn lacunary_levels_are_measurable() {
    let (_dir, r) = run_bundled("lacunary", &[]);
    let c = &r["tasks"][0]["result"]["classification"];
    assert_eq!(c["levels"][0]["verdict"]["tag"], "measurable_coboundary");
    assert_eq!(c["ue_wrt_fixed_point"], false);
    assert_eq!(r["tasks"][1]["result"]["verdict"]["certificate"]["kind"], "l2_divergence");
    assert_eq!(r["tasks"][2]["result"]["mode"], "W*-evidence");
}

#[test]
fn bundled_scenarios_validate() {
    for name in ["trivial", "winding-one", "constant-coboundary", "lacunary"] {
        let o = skewprod(&["validate", name]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn malformed_rotation_reports_the_field_path() {
    let dir = TempDir::new().unwrap();
    let f = scenario_file(dir.path(), &MINIMAL.replace(r#""cf": [0, 2]"#, r#""cf": [0, "two"]"#));
    let out = dir.path().join("out");
    for args in [vec!["run", &f, "--out", out.to_str().unwrap()], vec!["validate", &f]] {
        let o = skewprod(&args);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("theta[0].cf[1]"), "{}", stderr(&o));
    }
    let f = scenario_file(dir.path(), &MINIMAL.replace(r#""cf": [0, 1]"#, r#""cf": [0, 0]"#));
    let o = skewprod(&["validate", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha: continued fraction terms must be positive"), "{}", stderr(&o));
}

#[test]
fn validation_names_measure_defects() {
    let dir = TempDir::new().unwrap();
    let states = |measure: &str| {
        MINIMAL.replace(
            r#"{"task": "average", "cocycle": "u"}"#,
            &format!(r#"{{"task": "states", "cocycle": "u", "measures": {{"m": {measure}}}}}"#),
        )
    };
    let o = skewprod(&["validate", &scenario_file(dir.path(), &states(r#"{"atoms": [[0.25, -0.5]]}"#))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tasks[0].measures.m: invalid measure: atom 0 has negative weight"), "{}", stderr(&o));
    let o = skewprod(&["validate", &scenario_file(dir.path(), &states(r#"{"moments": [[1, 0.9, 0.0], [2, -0.9, 0.0]]}"#))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Toeplitz minor of order 3"), "{}", stderr(&o));
    let o = skewprod(&["validate", &scenario_file(dir.path(), MINIMAL)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok"));
}

#[test]
fn band_overflow_is_a_budget_error() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL.replace(r#""windows": [10, 1000]"#, r#""windows": [10, 1000], "expansion": {"cap": 64, "tol": 1e-13}"#);
    let f = scenario_file(dir.path(), &text);
    let o = skewprod(&["run", &f, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("task 0 (average): band overflow"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_is_an_error() {
    let o = skewprod(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("neither a readable file nor a bundled scenario"));
}

#[test]
fn states_without_a_generator_are_not_constructed() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL.replace(
        r#"{"task": "average", "cocycle": "u"}"#,
        r#"{"task": "states", "cocycle": "u", "measures": {"haar": {}}}"#,
    );
    let f = scenario_file(dir.path(), &text);
    let out = dir.path().join("out");
    let o = skewprod(&["run", &f, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let res = &r["tasks"][0]["result"];
    assert_eq!(res["states"], Value::Null);
    assert_eq!(res["reason"], "uniquely ergodic: the invariant state is omega alone");
}
