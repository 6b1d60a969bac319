use std::path::PathBuf;
use std::process::{Command, Output};

fn lpstcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpstcn")).args(args).output().expect("binary runs")
}

fn t1() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/t1.json").display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lpstcn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn solve_prints_plan_json() {
    let out = lpstcn(&["solve", &t1()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "Optimal");
    assert!((v["objective"].as_f64().unwrap() - 940.0).abs() < 1e-6);
}

#[test]
fn solve_writes_run_record() {
    let csv = scratch("t1.csv");
    let out = lpstcn(&["solve", &t1(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("instance,seed,variant"));
    assert!(lines.next().unwrap().starts_with("t1,,config"));
}

#[test]
fn oracle_and_compare_agree_on_t1() {
    let out = lpstcn(&["oracle", &t1()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 940.0).abs() < 1e-6);
    assert_eq!(lpstcn(&["compare", &t1()]).status.code(), Some(0));
}

#[test]
fn generate_then_solve() {
    let path = scratch("gen.json");
    let out = lpstcn(&["generate", "--seed", "3", "--n1", "4", "--n2", "3", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = lpstcn(&["compare", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn sweep_and_bench_emit_csv() {
    let out = lpstcn(&["sweep", "--destinations", "8", "--thetas", "0.8,0.5,1.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().contains("Error"));

    let out = lpstcn(&["bench", "--batch", "2", "--ablation", "--n1", "3", "--n2", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 2 * 4);
}

#[test]
fn exit_codes() {
    assert_eq!(lpstcn(&["--help"]).status.code(), Some(0));
    assert_eq!(lpstcn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lpstcn(&["solve", "/nonexistent.json"]).status.code(), Some(1));
    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\"origin\": \"o\"}").unwrap();
    assert_eq!(lpstcn(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lpstcn(&["oracle", &t1(), "--time-limit-s", "0"]).status.code(), Some(1));
}
