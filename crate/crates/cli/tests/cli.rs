use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_asai-verify"));
    c.env_remove("ASAI_VERIFIER_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("asai-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_suites() {
    let out = run(&["list-suites"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names.len(), 13);
    assert!(names.iter().any(|n| n == "ddivn") && names.iter().any(|n| n == "plancherel"));
}

#[test]
fn passing_suite_exits_zero() {
    let out = run(&["verify", "rnd", "--max-n", "200", "--D", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let first = &v[0];
    for key in ["suite_name", "instance", "lhs", "rhs", "abs_error", "rel_error", "pass", "runtime_ms", "provenance"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn failing_suite_exits_one() {
    let out = run(&["verify", "compa", "--max-norm", "10", "--D", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("compa:"));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(run(&["verify", "nosuch"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "rnd", "--D", "4"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "rnd", "--max-norm", "-3"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "rnd", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "rnd", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    let bad = bin().args(["verify", "rnd", "--max-n", "20"]).env("ASAI_VERIFIER_THREADS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_override() {
    let dir = scratch("cfg");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"suite_name":"hecke","field_D":[5],"ranges":{"depth":8},"seed":4}"#).unwrap();
    let out_path = dir.join("out.csv");
    let out = run(&["verify", "--config", cfg.to_str().unwrap(), "--D", "13", "--format", "csv", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("suite_name,instance,"));
    assert!(lines.all(|l| l.starts_with("hecke,D=13;")));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn report_converts_json_to_csv() {
    let dir = scratch("report");
    let json = dir.join("r.json");
    let out = run(&["verify", "euler", "--samples", "3", "--max-n", "5", "--D", "5", "--out", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = run(&["report", json.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    let reports: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(text.trim_end().lines().count(), reports.len() + 1);
    let again = run(&["report", json.to_str().unwrap(), "--format", "json"]);
    let round: Vec<serde_json::Value> = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(round, reports);
    assert_eq!(run(&["report", dir.join("absent.json").to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn parallel_output_matches_sequential() {
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        for r in v.as_array_mut().unwrap() {
            r["runtime_ms"] = 0.into();
        }
        v
    };
    let a = strip(run(&["verify", "ddivn", "--samples", "20000", "--parallel", "1"]));
    let b = strip(bin().args(["verify", "ddivn", "--samples", "20000"]).env("ASAI_VERIFIER_THREADS", "3").output().unwrap());
    assert_eq!(a, b);
}
