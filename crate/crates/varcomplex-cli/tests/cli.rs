//! End-to-end tests of the command-line contract.

use std::process::{Command, Output};

fn varcomplex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varcomplex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 output")
}

#[test]
fn el_reports_wave_operator() {
    let out = varcomplex(&[
        "el",
        "--base",
        "t,x",
        "--fiber",
        "u",
        "--lagrangian",
        "1/2*(u_t^2 - u_x^2)",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text, "euler-lagrange form: (u_xx - u_tt)*th(u)^dt^dx\n");
}

#[test]
fn helmholtz_failure_exits_1_with_certificate() {
    let out = varcomplex(&["helmholtz", "--base", "x", "--fiber", "u", "--source", "u_x"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("fails"), "{text}");
    assert!(text.contains("certificate"), "{text}");
}

#[test]
fn helmholtz_pass_exits_0() {
    let out = varcomplex(&["helmholtz", "--base", "x", "--fiber", "u", "--source", "-u_xx"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("passes"));
}

#[test]
fn trivial_negative_exits_1() {
    let out = varcomplex(&[
        "trivial",
        "--base",
        "x",
        "--fiber",
        "u",
        "--lagrangian",
        "1/2*u_x^2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("no"));
}

#[test]
fn unknown_variable_is_a_usage_error() {
    let out = varcomplex(&["el", "--base", "x", "--fiber", "u", "--lagrangian", "1/2*w^2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown variable `w`"), "{}", stderr(&out));
}

#[test]
fn problem_file_and_inline_flags_agree() {
    let dir = std::env::temp_dir();
    let path = dir.join("varcomplex_problem_test.json");
    std::fs::write(
        &path,
        r#"{"bundle": {"base": ["x"], "fiber": ["u"]}, "lagrangian": "1/2*u_x^2"}"#,
    )
    .unwrap();
    let from_file = varcomplex(&["el", "--problem", path.to_str().unwrap()]);
    let inline = varcomplex(&["el", "--base", "x", "--fiber", "u", "--lagrangian", "1/2*u_x^2"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&inline));
    // inline flags override file fields
    let overridden = varcomplex(&[
        "el",
        "--problem",
        path.to_str().unwrap(),
        "--lagrangian",
        "u*u_x",
    ]);
    assert!(stdout(&overridden).contains("0"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn malformed_problem_file_reports_line_and_column() {
    let dir = std::env::temp_dir();
    let path = dir.join("varcomplex_broken_problem.json");
    std::fs::write(&path, "{\n  \"bundle\": [,]\n}").unwrap();
    let out = varcomplex(&["el", "--problem", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let text = stderr(&out);
    assert!(text.contains("line 2"), "{text}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn schema_violations_carry_field_paths() {
    let dir = std::env::temp_dir();
    let path = dir.join("varcomplex_schema_problem.json");
    std::fs::write(
        &path,
        r#"{"bundle": {"base": ["x"], "fiber": ["u"]}, "lagrangia": "u"}"#,
    )
    .unwrap();
    let out = varcomplex(&["el", "--problem", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lagrangia"), "{}", stderr(&out));
    // empty document: missing bundle
    std::fs::write(&path, "{}").unwrap();
    let out2 = varcomplex(&["el", "--problem", path.to_str().unwrap()]);
    assert_eq!(out2.status.code(), Some(2));
    assert!(stderr(&out2).contains("bundle"), "{}", stderr(&out2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn split_and_apply_compose() {
    let split = varcomplex(&[
        "split",
        "--base",
        "x",
        "--fiber",
        "u",
        "--lagrangian",
        "1/2*u_x^2",
        "--format",
        "json",
    ]);
    assert_eq!(split.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&split)).unwrap();
    assert_eq!(value["verified"], serde_json::Value::Bool(true));
    assert_eq!(value["source"]["u"], "-u_xx");

    let apply = varcomplex(&[
        "apply",
        "--base",
        "x",
        "--fiber",
        "u",
        "--operator",
        "tau",
        "--form",
        "u*th(u;x)^dx",
    ]);
    assert_eq!(apply.status.code(), Some(0));
    assert!(stdout(&apply).contains("-u_x*th(u)^dx"));
}

#[test]
fn noether_non_symmetry_exits_1() {
    let out = varcomplex(&[
        "noether",
        "--base",
        "t",
        "--fiber",
        "u",
        "--lagrangian",
        "1/2*u^2",
        "--field",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("is symmetry: false"), "{text}");
    assert!(text.contains("identity holds: true"), "{text}");
}

#[test]
fn latex_output_matches_convention() {
    let out = varcomplex(&[
        "el",
        "--base",
        "x",
        "--fiber",
        "u",
        "--lagrangian",
        "1/2*u_x^2",
        "--format",
        "latex",
    ]);
    assert_eq!(stdout(&out), "-u_{xx}\\,\\theta^{u}\\wedge dx\n");
}

#[test]
fn betti_csv_rows() {
    let out = varcomplex(&[
        "betti",
        "--base",
        "x",
        "--fiber",
        "u",
        "--max-order",
        "1",
        "--max-degree",
        "1",
        "--base-degree",
        "1",
        "--csv",
        "--skip-exactness",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("operator,descriptor,position"), "{text}");
    assert!(text.lines().count() >= 3, "{text}");
}

#[test]
fn props_failure_free_run_exits_0() {
    let out = varcomplex(&["props", "--seed", "1", "--cases", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pass"));
}

#[test]
fn trivial_with_witness_and_closed_form() {
    // L = h0(u dy(u)) + d_H(x u): closed part phi = u dy(u) = d(u^2/2)
    let out = varcomplex(&[
        "trivial",
        "--base",
        "x",
        "--fiber",
        "u",
        "--lagrangian",
        "u*u_x + u + x*u_x",
        "--closed-form",
        "u*dy(u)",
        "--max-order",
        "1",
        "--max-degree",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["trivial"], serde_json::Value::Bool(true));
    assert!(value.get("xi").is_some());
}
