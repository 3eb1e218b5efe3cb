use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn uwot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwot")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const QUADRATIC: &str = r#"{
  "version": 1,
  "mu": { "atoms": [[0.0, 0.0], [1.0, 0.5], [-0.5, 1.0]], "weights": [0.3, 0.5, 0.2] },
  "nu": { "atoms": [[1.0, 1.0], [2.0, 0.5], [0.5, 2.0]], "weights": [0.4, 0.4, 0.2] },
  "cost": { "kind": "quadratic" }
}"#;

const PIECEWISE: &str = r#"{
  "version": 1,
  "mu": { "atoms": [[0.0], [1.0], [2.0]], "weights": [0.3, 0.4, 0.3] },
  "nu": { "atoms": [[0.5], [1.5], [2.5]], "weights": [0.2, 0.5, 0.3] },
  "cost": { "kind": "piecewise_linear", "pieces": [
    [{ "u": [1.0], "a": 0.0 }, { "u": [-1.0], "a": 0.0 }],
    [{ "u": [1.0], "a": -1.0 }, { "u": [-1.0], "a": 1.0 }],
    [{ "u": [1.0], "a": -2.0 }, { "u": [-1.0], "a": 2.0 }]
  ] },
  "solver": { "method": "lp" }
}"#;

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn solve_reports_and_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", QUADRATIC);
    let (k, f, out) = (dir.path().join("k.csv"), dir.path().join("f.csv"), dir.path().join("r.json"));
    let o = uwot(&["solve", s(&p), "--kernel", s(&k), "--potential", s(&f), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["status"], "success");
    assert!(r["gap"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r, serde_json::from_str::<Value>(&std::fs::read_to_string(&out).unwrap()).unwrap());
    assert!(std::fs::read_to_string(&k).unwrap().starts_with("mu,N,S_0,S_1,q_0,q_1,q_2\n"));
    assert!(std::fs::read_to_string(&f).unwrap().starts_with("atom,value\n"));

    // the written potential evaluates to the reported dual value
    let d = json(&uwot(&["dual", s(&p), "--potential", s(&f)]));
    assert!((d["dual"].as_f64().unwrap() - r["dual"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", QUADRATIC);
    let strip = |o: Output| {
        let mut v = json(&o);
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(uwot(&["solve", s(&p)])), strip(uwot(&["solve", s(&p)])));
    let single = Command::new(env!("CARGO_BIN_EXE_uwot")).env("UWOT_THREADS", "1").args(["solve", s(&p)]).output().unwrap();
    assert_eq!(strip(single), strip(uwot(&["solve", s(&p)])));
}

#[test]
fn kernel_round_trip_through_plotdata() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", PIECEWISE);
    let k = dir.path().join("k.csv");
    assert_eq!(code(&uwot(&["solve", s(&p), "--kernel", s(&k)])), 0);
    let from_plan = uwot(&["plotdata", s(&p), "--plan", s(&k)]);
    let fresh = uwot(&["plotdata", s(&p)]);
    assert_eq!(code(&from_plan), 0);
    assert_eq!(from_plan.stdout, fresh.stdout);
    let text = String::from_utf8(fresh.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x_0,mu,N,S_0,T_0,argmax");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bareval_prices_singular_couplings() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"version": 1,
            "mu": {"atoms": [[0.0], [0.5], [1.0]], "weights": [0.5, 0.5, 0.0]},
            "nu": {"atoms": [[2.0]], "weights": [1.0]},
            "cost": {"kind": "linear", "table": [[4.0], [2.25], [1.0]]}}"#,
    );
    let pi = write(dir.path(), "pi.csv", "pi_0\n0\n0\n1\n");
    let o = uwot(&["bareval", s(&p), "--coupling", s(&pi)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["bar_i"].as_f64(), Some(1.0));
}

#[test]
fn order_verdicts_and_witnesses() {
    let dir = TempDir::new().unwrap();
    let nu = write(dir.path(), "nu.json", r#"{"version": 1, "atoms": [[1.0], [3.0]], "weights": [0.5, 0.5]}"#);
    let inside = write(dir.path(), "a.json", r#"{"version": 1, "atoms": [[2.0]], "weights": [1.0]}"#);
    let outside = write(dir.path(), "b.json", r#"{"version": 1, "atoms": [[4.0]], "weights": [1.0]}"#);
    let (k, w) = (dir.path().join("k.csv"), dir.path().join("w.json"));

    let o = uwot(&["order", s(&inside), s(&nu), "--kernel", s(&k)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "dominated");
    assert!(k.exists());

    let o = uwot(&["order", s(&outside), s(&nu), "--witness", s(&w)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "not-dominated");
    let witness: Value = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    assert!(witness["margin"].as_f64().unwrap() > 1e-9);
}

#[test]
fn project_and_brenier_commands() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", PIECEWISE);
    let o = uwot(&["project", s(&p)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["matches"], true);
    assert!((r["ic_value"].as_f64().unwrap() - r["transport_value"].as_f64().unwrap()).abs() <= 1e-7);

    let mu = write(dir.path(), "mu.json", r#"{"version": 1, "atoms": [[0.0, 0.0], [1.0, 0.5]], "weights": [0.5, 0.5]}"#);
    let nu = write(dir.path(), "nu.json", r#"{"version": 1, "atoms": [[1.0, 1.0], [2.0, 0.5]], "weights": [0.5, 0.5]}"#);
    let o = uwot(&["brenier", s(&mu), s(&nu)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["pass"], true);
}

#[test]
fn parse_errors_exit_with_1() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{ \"version\": 1, \"mu\": ");
    assert_eq!(code(&uwot(&["solve", s(&bad)])), 1);
    let unknown = write(dir.path(), "u.json", &QUADRATIC.replacen("\"version\": 1,", "\"version\": 1, \"extra\": 0,", 1));
    let o = uwot(&["solve", s(&unknown)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("extra"));
    let future = write(dir.path(), "v.json", &QUADRATIC.replacen("\"version\": 1", "\"version\": 9", 1));
    assert_eq!(code(&uwot(&["solve", s(&future)])), 1);
    assert_eq!(code(&uwot(&["solve", s(&dir.path().join("missing.json"))])), 1);
}

#[test]
fn unbalanced_masses_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", &QUADRATIC.replace("[0.4, 0.4, 0.2]", "[0.8, 0.8, 0.4]"));
    let o = uwot(&["solve", s(&p)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreachable_tolerance_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.json", QUADRATIC);
    let o = uwot(&["solve", s(&p), "--tol", "0"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["status"], "gap_exceeds_tol");
}

#[test]
fn zero_tolerance_is_reported_as_failure() {
    let o = uwot(&["validate", "--suite", "properties", "--seed", "7", "--tol-override", "0"]);
    assert_eq!(code(&o), 4);
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn validate_golden_passes() {
    let o = uwot(&["validate", "--suite", "golden", "--seed", "42"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["checks"].as_array().unwrap().len(), 8);
}
