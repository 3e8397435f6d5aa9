use std::process::{Command, Output};

use serde_json::Value;

fn enhance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enhance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tmp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("enhance-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn enhance_json_has_expected_keys() {
    let o = enhance(&["enhance", "--expr", "F = z*conj(w)", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["map_source", "radius", "seed", "lambda", "rho", "mu", "lambda_estimate", "rho_estimate", "checks", "timestamp"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v.get("timings").map_or(true, Value::is_null));
    assert_eq!(v["lambda"], 1);
    assert_eq!(v["rho"], 0);
}

#[test]
fn timings_only_on_request() {
    let o = enhance(&["enhance", "F = z*w", "--json", "--timings"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["timings"]["lambda_ms"].is_number());
}

#[test]
fn map_from_file() {
    let path = tmp_path("map.txt");
    std::fs::write(&path, "f = x*u - y*v; g = x*v + y*u\n").unwrap();
    let o = enhance(&["enhance", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("lambda = 0   rho = 1   mu = 1"));
}

#[test]
fn syntax_error_points_at_position() {
    let o = enhance(&["enhance", "F = z * * w"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("F = z * * w"), "{err}");
    assert!(err.contains('^'), "{err}");
}

#[test]
fn division_is_rejected() {
    let o = enhance(&["enhance", "F = z/w"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_isolated_exits_one() {
    let o = enhance(&["enhance", "f = x*y; g = 0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("isolated critical point check failed"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(enhance(&["enhance", "F = z*w", "--bogus"]).status.code(), Some(1));
    assert_eq!(enhance(&["enhance", "F = z*w", "--radius", "-1"]).status.code(), Some(1));
    assert_eq!(enhance(&[]).status.code(), Some(1));
    assert_eq!(enhance(&["--help"]).status.code(), Some(0));
}

#[test]
fn braid_command() {
    let o = enhance(&["braid", "B2: s1 s1 s1", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lambda"], 0);
    assert_eq!(v["exponent_sum"], 3);
    assert_eq!(v["n"], 2);
    assert_eq!(v["components"], 1);
    assert_eq!(enhance(&["braid", "B2: s3"]).status.code(), Some(1));
}

#[test]
fn plumb_command() {
    let tree = r#"{"signs": ["+", "-", "-"], "edges": [[0, 1], [1, 2]]}"#;
    let o = enhance(&["plumb", tree, "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["lambda"].as_u64(), v["mu"].as_u64(), v["mirror_lambda"].as_u64()), (Some(2), Some(3), Some(1)));
    let cyclic = r#"{"signs": ["+", "-"], "edges": [[0, 1], [1, 0]]}"#;
    assert_eq!(enhance(&["plumb", cyclic]).status.code(), Some(1));
}

#[test]
fn trace_writes_csv() {
    let path = tmp_path("curves.csv");
    let o = enhance(&["trace", "--expr", "F = z*w", "--q", "0,0.6,-0.8", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u,v"));
    for line in lines.filter(|l| !l.is_empty()) {
        let r2: f64 = line.split(',').map(|t| t.parse::<f64>().unwrap().powi(2)).sum();
        assert!((r2 - 1.0).abs() < 1e-8);
    }
}

#[test]
fn trace_without_preimage_writes_nothing() {
    // The self-dual triple of zw is constant, so only one point has a preimage.
    let path = tmp_path("none.csv");
    let o = enhance(&["trace", "--expr", "F = z*w", "--which", "plus", "--q", "0,1,0", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("no preimage"));
    assert!(!path.exists());
}

#[test]
fn trace_rejects_non_unit_q() {
    let o = enhance(&["trace", "--expr", "F = z*w", "--q", "0,0,2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_passes_and_detects_faults() {
    let o = enhance(&["check", "--n-random", "3", "--points", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 failed"));
    let o = enhance(&["check", "--n-random", "3", "--points", "50", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn threads_flag_is_accepted() {
    let o = enhance(&["--threads", "2", "enhance", "F = z*w", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn curve_export_writes_both_factors() {
    let base = tmp_path("export");
    let o = enhance(&["enhance", "F = z^2 - w^3", "--curve-export", base.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for half in ["plus", "minus"] {
        let p = std::path::PathBuf::from(format!("{}-{half}.csv", base.display()));
        assert!(std::fs::read_to_string(p).unwrap().starts_with("x,y,u,v"));
    }
}
