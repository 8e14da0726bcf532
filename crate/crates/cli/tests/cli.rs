use std::path::Path;
use std::process::{Command, Output};

fn xnmr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xnmr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn verdicts(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn run_writes_the_golden_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let o = xnmr(&["run", "--scenario", "example1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read_to_string(&out).unwrap();
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/example1.jsonl");
    let golden = std::fs::read_to_string(golden_path).unwrap();
    assert_eq!(written.lines().count(), 2);
    assert_eq!(written, golden);
    assert!(stdout(&o).contains("step 2"));
}

#[test]
fn explicit_queries_override_the_scenario() {
    let o = xnmr(&["run", "--scenario", "example1", "--queries", "5,0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("step 1") && !text.contains("step 2"));
}

#[test]
fn negative_coordinates_parse() {
    let o = xnmr(&["run", "--scenario", "sufficient-box", "--queries", "-20,-20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("x=(-20,-20)"));
}

#[test]
fn strict_run_fails_on_alerts() {
    assert_eq!(xnmr(&["run", "--scenario", "example2-naive"]).status.code(), Some(0));
    let o = xnmr(&["run", "--scenario", "example2-naive", "--strict"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("inconsistent at"));
}

#[test]
fn off_grid_query_is_a_data_error() {
    let o = xnmr(&["run", "--scenario", "example1", "--queries", "99,0"]);
    assert_eq!(o.status.code(), Some(65));
}

#[test]
fn malformed_queries_are_a_usage_error() {
    assert_eq!(xnmr(&["run", "--scenario", "example1", "--queries", "5;x"]).status.code(), Some(2));
}

#[test]
fn missing_scenario_file() {
    let o = xnmr(&["run", "--scenario", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(66));
}

#[test]
fn invalid_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "bad", "surprise": true}"#).unwrap();
    let o = xnmr(&["check", "--scenario", path.to_str().unwrap(), "--property", "consistency"]);
    assert_eq!(o.status.code(), Some(65));
}

#[test]
fn unknown_property_is_a_usage_error() {
    let o = xnmr(&["check", "--scenario", "example1", "--property", "transitivity"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn specific_consistency_holds() {
    let o = xnmr(&[
        "check", "--scenario", "example2-mss", "--property", "consistency", "--len", "3", "--points", "5,0;20,5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdicts(&o);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["status"], "holds_up_to_bound");
}

#[test]
fn cautious_monotonicity_failure_prints_a_witness() {
    let o = xnmr(&["check", "--scenario", "example3", "--property", "cautious_monotonicity"]);
    assert_eq!(o.status.code(), Some(1));
    let v = verdicts(&o);
    assert_eq!(v[0]["status"], "fails");
    assert_eq!(v[0]["witness"]["kind"], "cautious_monotonicity");
    assert_eq!(v[0]["witness"]["target"]["point"], serde_json::json!([20, -10]));
    assert_eq!(v[0]["reverified"], true);
}

#[test]
fn interaction_stability_holds_for_example1() {
    let o = xnmr(&["check", "--scenario", "example1", "--property", "interaction_stability"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn declared_checks_run_by_default_and_can_be_saved() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.jsonl");
    let o = xnmr(&["check", "--scenario", "example2-naive", "--out", out.to_str().unwrap()]);
    // One declared check is expected to fail.
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(verdicts(&o).len(), 3);
    assert_eq!(std::fs::read_to_string(out).unwrap(), stdout(&o));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = xnmr(&["run", "--scenario", "example1", "--out", "/definitely/not/here/t.jsonl"]);
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn scenarios_lists_and_shows() {
    let o = xnmr(&["scenarios"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 6);
    let shown = xnmr(&["scenarios", "--show", "example3"]);
    let file: serde_json::Value = serde_json::from_slice(&shown.stdout).unwrap();
    assert_eq!(file["name"], "example3");
}
