use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_autobid-fpa"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const MIXED: &str = r#"{
  "instance": {"n": 2, "m": 1, "values": [[1.0], [0.5]], "kinds": ["utility", "value"]},
  "profile": [[[{"bid": 0.9, "prob": 1.0}]], [[{"bid": 0.3, "prob": 1.0}]]]
}"#;

#[test]
fn bounds_without_reserves() {
    let o = run(&["bounds", "--gamma", "0"], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["bound_value"].as_f64().unwrap() - 0.457).abs() <= 5e-4);
    assert_eq!(v["full_autobidding_bound"].as_f64(), Some(0.5));
}

#[test]
fn bounds_reject_gamma_outside_unit_interval() {
    let o = run(&["bounds", "--gamma", "1.5"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn half_ratio_instance_verifies() {
    let made = run(&["make-instance", "thm1", "--eps", "0.01"], None);
    assert_eq!(made.status.code(), Some(0));
    let o = run(&["verify", "--epsilon", "1e-9"], Some(&stdout(&made)));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["is_equilibrium"], Value::Bool(true));
}

#[test]
fn negative_probability_is_a_validation_error() {
    let input = r#"{
      "instance": {"n": 1, "m": 1, "values": [[1.0]], "kinds": ["utility"]},
      "profile": [[[{"bid": 0.5, "prob": -0.1}, {"bid": 0.2, "prob": 1.1}]]]
    }"#;
    let o = run(&["verify"], Some(input));
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("profile[0][0][0].prob"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn malformed_instance_names_the_field() {
    let input = r#"{"n": 1, "m": 1, "values": [[-1.0]], "kinds": ["utility"]}"#;
    let o = run(&["dynamics"], Some(input));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("values[0][0]"), "{}", stderr(&o));
}

#[test]
fn unknown_flags_are_rejected() {
    let o = run(&["verify", "--bogus"], Some(MIXED));
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn non_equilibrium_exits_two() {
    // the utility maximizer overpays by 0.6
    let o = run(&["verify"], Some(MIXED));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["is_equilibrium"], Value::Bool(false));
}

#[test]
fn infeasible_profile_exits_two() {
    let input = r#"{
      "instance": {"n": 1, "m": 1, "values": [[0.5]], "kinds": ["value"]},
      "profile": [[[{"bid": 0.8, "prob": 1.0}]]]
    }"#;
    let o = run(&["verify"], Some(input));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ROI"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = run(
        &[
            "sweep-gamma",
            "--step",
            "0.01",
            "--output",
            path.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma,mixed_bound,full_autobidding_bound");
    assert_eq!(lines.len(), 102);
    assert!(lines[101].starts_with("1.000000,1.000000,1.000000"));
}

#[test]
fn audit_table_has_one_row_per_check() {
    let made = run(
        &["make-instance", "lem-lb", "--t", "0.2", "--grid", "400"],
        None,
    );
    let o = run(&["audit", "--epsilon", "0.01"], Some(&stdout(&made)));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["lemma", "lhs", "rhs", "margin", "pass"]);
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|r| r.starts_with("value ")));
    assert!(rows.iter().any(|r| r.starts_with("local[")));
    assert!(rows.iter().all(|r| r.ends_with("true")));
}

#[test]
fn random_instances_are_deterministic() {
    let args = [
        "make-instance",
        "random",
        "--seed",
        "7",
        "--n",
        "3",
        "--m",
        "2",
        "--gamma",
        "0.4",
    ];
    let a = run(&args, None);
    let b = run(&args, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a)["instance"]["reserves"].is_array());
}

#[test]
fn dynamics_reports_convergence() {
    let made = run(
        &[
            "make-instance",
            "random",
            "--seed",
            "3",
            "--n",
            "2",
            "--m",
            "2",
        ],
        None,
    );
    let o = run(&["dynamics", "--start", "input"], Some(&stdout(&made)));
    let v = json(&o);
    let converged = v["converged"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if converged { 0 } else { 2 }));
    assert!(v["profile"].is_array());
}

#[test]
fn best_response_lists_frontiers() {
    let o = run(
        &["best-response", "--bidder", "0", "--frontiers"],
        Some(MIXED),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["frontiers"].as_array().unwrap().len(), 1);
    // best reply to a 0.3 bid is to match it and win the tie
    let row = v["row"][0].as_array().unwrap();
    assert!((row[0]["bid"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    let o = run(&["best-response", "--bidder", "5"], Some(MIXED));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_file_and_stdin_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, MIXED).unwrap();
    let a = run(&["verify", "--input", path.to_str().unwrap()], None);
    let b = run(&["verify"], Some(MIXED));
    assert_eq!(a.stdout, b.stdout);
}
