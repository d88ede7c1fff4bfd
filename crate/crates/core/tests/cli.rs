mod common;

use common::models_dir;
use std::path::Path;
use std::process::{Command, Output};

fn automode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_automode")).args(args).env_remove("AUTOMODE_PROFILE").output().unwrap()
}

fn m(f: &str) -> String {
    models_dir().join(f).to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn clean_engine_model_checks() {
    let o = automode(&["check", &m("engine.amd")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!stderr(&o).lines().any(|l| l.starts_with("error ")));
    assert!(o.stdout.is_empty());
}

#[test]
fn model_errors_exit_one_with_diagnostic_lines() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.amd");
    std::fs::write(&f, "project B; level FDA; component C { in x : int; out y : bool; function { y = x + 1; } }")
        .unwrap();
    let o = automode(&["check", s(&f)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().all(|l| l.starts_with("error AM-") || l.starts_with("warning AM-")), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(automode(&[]).status.code(), Some(2));
    assert_eq!(automode(&["simulate", &m("engine.amd"), "-o", "/dev/null"]).status.code(), Some(2));
    assert_eq!(
        automode(&["transform", &m("engine.amd"), "--step", "refine", "-o", "/dev/null"]).status.code(),
        Some(2)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_automode"))
        .args(["check", &m("engine.amd")])
        .env("AUTOMODE_PROFILE", "bogus")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_profile_flags_fast_to_slow() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.amd");
    std::fs::write(&f, common::ccd_pair(10, 100, false)).unwrap();
    assert_eq!(automode(&["check", s(&f)]).status.code(), Some(0));
    let o = automode(&["check", s(&f), "--profile", "strict"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AM-CCD-001"));
}

#[test]
fn scripted_scenario_matches_golden_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = automode(&["simulate", &m("engine.amd"), "--inputs", &m("engine_inputs.csv"), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(m("engine_golden.csv")).unwrap());
}

#[test]
fn pipeline_through_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let steps: [&[&str]; 6] = [
        &["import", "--comm-matrix", &m("comm_matrix.csv"), "-o", &p("faa.amd")],
        &["check", &p("faa.amd")],
        &["transform", &m("engine.amd"), "--step", "flatten", "--depth", "1", "-o", &p("ccd.amd")],
        &["transform", &p("ccd.amd"), "--step", "refine", "--map", &m("engine.map"), "-o", &p("ref.amd")],
        &["transform", &p("ref.amd"), "--step", "cluster", "--insert-delays", "-o", &p("la.amd")],
        &["deploy", &p("la.amd"), "--ta", &m("engine_ta.amd"), "--map", &m("engine_deploy.amd"), "-o", &p("manifest")],
    ];
    for args in steps {
        let o = automode(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(automode(&["check", &p("la.amd")]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(p("manifest")).unwrap(), std::fs::read_to_string(m("engine.manifest")).unwrap());
}

#[test]
fn mtd_step_and_seeded_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let o = automode(&[
        "transform",
        &m("engine.amd"),
        "--step",
        "mtd2dfd",
        "--component",
        "ThrottleRateOfChange",
        "-o",
        &p("dfd.amd"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["engine.amd", "dfd.amd"] {
        let src = if f == "engine.amd" { m(f) } else { p(f) };
        let o = automode(&[
            "simulate",
            &src,
            "--ticks",
            "100",
            "--seed",
            "4",
            "--absent",
            "0.1",
            "-o",
            &p(&format!("{f}.csv")),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(p("engine.amd.csv")).unwrap(), std::fs::read(p("dfd.amd.csv")).unwrap());
}

#[test]
fn deploy_without_frame_slot_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    for args in [
        ["transform", &m("engine.amd"), "--step", "flatten", "--depth", "1", "-o", &p("ccd.amd")].as_slice(),
        &["transform", &p("ccd.amd"), "--step", "refine", "--map", &m("engine.map"), "-o", &p("ref.amd")],
        &["transform", &p("ref.amd"), "--step", "cluster", "--insert-delays", "-o", &p("la.amd")],
    ] {
        assert_eq!(automode(args).status.code(), Some(0));
    }
    std::fs::write(p("dep.amd"), "deploy C_10ms -> T10;\ndeploy C_100ms -> T100;\n").unwrap();
    let o =
        automode(&["deploy", &p("la.amd"), "--ta", &m("engine_ta.amd"), "--map", &p("dep.amd"), "-o", &p("manifest")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AM-DEPLOY-003"));
    assert!(!Path::new(&p("manifest")).exists());
}
