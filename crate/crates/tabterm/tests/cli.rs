//! End-to-end runs of the `tabterm` binary: exit codes, JSON stability,
//! and the certify/check round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples").join(name)
}

fn tabterm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabterm"))
        .args(args)
        .env("TABTERM_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_cyclic_graph_is_quasi_proved_with_exit_zero() {
    let f = example("exaconstr.tlp");
    let out = tabterm(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_stdout(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["quasi"]["verdict"], "proved");
    assert_eq!(doc["lg"]["verdict"], "unproved-within-bound");
    assert_eq!(doc["well_chosen"]["ok"], true);
    assert_eq!(doc["modes"]["well_moded"], true);
}

#[test]
fn check_goal_both_fails_on_the_travelling_edge_list() {
    let f = example("path.tlp");
    let out = tabterm(&["check", f.to_str().unwrap(), "--goal", "both"]);
    assert_eq!(code(&out), 1);
    let doc = json_stdout(&out);
    assert_eq!(doc["quasi"]["verdict"], "proved");
    assert_eq!(doc["lg"]["verdict"], "unproved-within-bound");
    // quasi alone is the default goal and succeeds
    let out = tabterm(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
}

#[test]
fn certify_accepts_the_bundled_solutions() {
    let p = example("exaconstr.tlp");
    let c = example("paper_solution.json");
    let out = tabterm(&["certify", p.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json_stdout(&out);
    assert_eq!(rep["failures"], 0);

    let p = example("grammar_r.tlp");
    let c = example("grammar_solution.json");
    let out = tabterm(&["certify", p.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certify_accepts_what_check_emitted() {
    let p = example("reachable.tlp");
    let out = tabterm(&["check", p.to_str().unwrap(), "--goal", "lg"]);
    assert_eq!(code(&out), 0);
    let doc = json_stdout(&out);
    let cert = &doc["lg"]["certificate"];
    assert!(cert.is_object(), "lg proof must carry a certificate");
    let tmp = std::env::temp_dir()
        .join(format!("tabterm_cli_cert_{}.json", std::process::id()));
    std::fs::write(&tmp, serde_json::to_string(cert).unwrap()).unwrap();
    let out = tabterm(&["certify", p.to_str().unwrap(), tmp.to_str().unwrap()]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certify_rejects_a_foreign_fingerprint_with_exit_two() {
    let p = example("path.tlp");
    let c = example("paper_solution.json");
    let out = tabterm(&["certify", p.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fingerprint"), "stderr: {err}");
}

#[test]
fn certify_exits_one_when_conditions_fail() {
    // same fingerprint, coefficients zeroed out: the measured-input
    // conditions must fail
    let p = example("exaconstr.tlp");
    let cert: Value = serde_json::from_str(
        &std::fs::read_to_string(example("paper_solution.json")).unwrap(),
    )
    .unwrap();
    let mut bad = cert.clone();
    bad["pred_coeffs"]["path/3"] = serde_json::json!([0, 0, 0]);
    let tmp = std::env::temp_dir()
        .join(format!("tabterm_cli_bad_{}.json", std::process::id()));
    std::fs::write(&tmp, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = tabterm(&["certify", p.to_str().unwrap(), tmp.to_str().unwrap()]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(code(&out), 1);
    let rep = json_stdout(&out);
    assert!(rep["failures"].as_u64().unwrap() >= 1);
}

#[test]
fn run_reports_completion_and_answers() {
    let p = example("reachable.tlp");
    let out = tabterm(&[
        "run",
        p.to_str().unwrap(),
        "--query",
        "reachable(a,[e(a,b),e(b,a)],Y)",
    ]);
    assert_eq!(code(&out), 0);
    let doc = json_stdout(&out);
    assert_eq!(doc["status"], "completed");
    let answers: Vec<&str> =
        doc["answers"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(answers, ["Y = b", "Y = a"]);
}

#[test]
fn run_exits_one_on_budget_exhaustion() {
    let p = example("path.tlp");
    let out = tabterm(&[
        "run",
        p.to_str().unwrap(),
        "--query",
        "path(a,[e(a,b),e(b,a)],Y,L)",
    ]);
    assert_eq!(code(&out), 1);
    let doc = json_stdout(&out);
    assert!(doc["status"].as_str().unwrap().starts_with("exhausted"));
}

#[test]
fn transform_output_is_loadable_source() {
    let p = example("path.tlp");
    let out = tabterm(&["transform", p.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let src = String::from_utf8(out.stdout).unwrap();
    assert!(src.contains(":- table path__a/4."), "{src}");
    let tmp = std::env::temp_dir()
        .join(format!("tabterm_cli_transformed_{}.tlp", std::process::id()));
    std::fs::write(&tmp, &src).unwrap();
    let out = tabterm(&[
        "run",
        tmp.to_str().unwrap(),
        "--query",
        "path(a,[e(a,b)],Y,L)",
    ]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn transforming_a_transformed_program_is_an_input_error() {
    let p = example("path.tlp");
    let out = tabterm(&["transform", p.to_str().unwrap()]);
    let tmp = std::env::temp_dir()
        .join(format!("tabterm_cli_retransform_{}.tlp", std::process::id()));
    std::fs::write(&tmp, &out.stdout).unwrap();
    let out = tabterm(&["transform", tmp.to_str().unwrap()]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(code(&out), 2);
}

#[test]
fn graph_emits_dot_for_both_views() {
    let p = example("exaconstr.tlp");
    let out = tabterm(&["graph", p.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph deps"));
    assert!(dot.contains("\"path/3\" -> \"edge/2\""));

    let out = tabterm(&[
        "graph",
        p.to_str().unwrap(),
        "--call-graph",
        "--query",
        "path(a,Y,L)",
    ]);
    assert_eq!(code(&out), 0);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph callgraph"));
    assert!(dot.contains("path(b,_G0,_G1)"));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let out = tabterm(&["frobnicate"]);
    assert_eq!(code(&out), 2);
    let out = tabterm(&["check", "/nonexistent/no.tlp"]);
    assert_eq!(code(&out), 2);
    let p = example("exaconstr.tlp");
    let out = tabterm(&["graph", p.to_str().unwrap(), "--call-graph"]);
    assert_eq!(code(&out), 2, "call-graph without query is a usage error");
    let out = tabterm(&["run", p.to_str().unwrap(), "--query", "nosuch(X)"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn reports_are_identical_across_runs_modulo_timing() {
    let p = example("grammar_r.tlp");
    let a = tabterm(&["check", p.to_str().unwrap(), "--goal", "both"]);
    let b = tabterm(&["check", p.to_str().unwrap(), "--goal", "both"]);
    let mut da = json_stdout(&a);
    let mut db = json_stdout(&b);
    da["timing_ms"] = 0.into();
    db["timing_ms"] = 0.into();
    assert_eq!(da, db);
}

#[test]
fn color_control_via_environment() {
    let p = example("exaconstr.tlp");
    let colored = Command::new(env!("CARGO_BIN_EXE_tabterm"))
        .args(["check", p.to_str().unwrap()])
        .env("TABTERM_COLOR", "1")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&colored.stderr).contains("\x1b["));
    let plain = tabterm(&["check", p.to_str().unwrap()]);
    assert!(!String::from_utf8_lossy(&plain.stderr).contains("\x1b["));
}
