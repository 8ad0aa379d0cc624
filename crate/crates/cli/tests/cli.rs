use std::process::{Command, Output};

use serde_json::Value;

fn rsrforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsrforge"))
        .args(args)
        .env_remove("RSRFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn infer_finds_a_property_and_exits_zero() {
    let out = rsrforge(&["infer", "--function", "inverse"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ids: Vec<&str> = v["properties"].as_array().unwrap().iter().map(|p| p["identity"].as_str().unwrap()).collect();
    assert!(ids.contains(&"f(r)*f(x) - f(r*x) = 0"), "{ids:?}");
}

#[test]
fn infer_without_property_exits_two() {
    assert_eq!(rsrforge(&["infer", "--function", "erf"]).status.code(), Some(2));
}

#[test]
fn unknown_function_and_bad_flags_exit_one() {
    let out = rsrforge(&["infer", "--function", "no_such_function"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert_eq!(rsrforge(&["infer", "--bogus"]).status.code(), Some(1));
}

#[test]
fn verify_reports_pass_and_fail() {
    let good = rsrforge(&["verify", "--function", "exp", "--expr", "f(x + y) - f(x)*f(y) = 0"]);
    assert_eq!(good.status.code(), Some(0));
    assert_eq!(json(&good)["status"], "pass");
    let bad = rsrforge(&["verify", "--function", "exp", "--expr", "f(x + y) - f(x) - f(y) = 0"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json(&bad)["status"], "fail");
}

#[test]
fn verify_accepts_infer_output() {
    let dir = std::env::temp_dir().join(format!("rsrforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("props.json");
    let inferred = rsrforge(&["infer", "--function", "squared"]);
    std::fs::write(&path, &inferred.stdout).unwrap();
    let out = rsrforge(&["verify", "--function", "squared", "--property", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!json(&out)["results"].as_array().unwrap().is_empty());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_sits_between_entry_and_flags() {
    let dir = std::env::temp_dir().join(format!("rsrforge-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "seed = 7\n[infer]\nmax_denominator = 20\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&rsrforge(&["infer", "--function", "linear", "--config", p]));
    assert_eq!(v["config"]["infer"]["seed"], 7);
    assert_eq!(v["config"]["infer"]["max_denominator"], 20);
    let v = json(&rsrforge(&["infer", "--function", "linear", "--config", p, "--seed", "9"]));
    assert_eq!(v["config"]["infer"]["seed"], 9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_rsrforge"))
        .args(["infer", "--function", "linear"])
        .env("RSRFORGE_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["infer"]["seed"], 5);
}

#[test]
fn repeated_runs_match() {
    let a = rsrforge(&["infer", "--function", "cube", "--seed", "3"]);
    let b = rsrforge(&["infer", "--function", "cube", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn list_functions_formats() {
    let out = rsrforge(&["list-functions", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    assert!(rows.as_array().unwrap().len() > 50);
    let text = rsrforge(&["list-functions", "--format", "text", "--filter", "category=trig"]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("sin ")));
    assert!(!text.lines().any(|l| l.starts_with("exp ")));
}

#[test]
fn bench_emits_rows() {
    let out = rsrforge(&["bench", "--names", "linear,squared", "--repetitions", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let text = v.to_string();
    assert!(text.contains("\"linear\"") && text.contains("\"squared\""), "{text}");
}
