use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hbspline::fixture::{load_fixture, MeshDump};
use hbspline::hierarchy::build_hierarchical_basis;
use hbspline_harness::report::{read_csv, read_json};
use hbspline_harness::suite::SuiteReport;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbs")).args(args).current_dir(root()).output().expect("failed to run hbs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = hbs(&["check", "fixtures/zero-weight-block.toml", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all invariants hold"));
    let rep: SuiteReport = read_json(&report).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.counts.h - rep.counts.htilde, rep.counts.zero_weight);
    assert!(rep.counts.zero_weight > 0);
}

#[test]
fn non_nested_fixture_is_an_input_error() {
    let out = hbs(&["check", "fixtures/invalid/non-nested.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hierarchy nesting"), "{}", stderr(&out));
}

#[test]
fn syntax_error_reports_line_and_column() {
    let out = hbs(&["check", "fixtures/invalid/syntax-error.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("syntax-error.toml:4:"), "{}", stderr(&out));
}

#[test]
fn missing_fixture_and_bad_arguments_exit_two() {
    assert_eq!(hbs(&["check", "fixtures/does-not-exist.toml"]).status.code(), Some(2));
    assert_eq!(hbs(&["study", "fixtures/families/uniform-d1-p1", "--f", "sin", "--q", "3", "--s", "2"]).status.code(), Some(2));
    let out = hbs(&["study", "fixtures/families/uniform-d1-p1", "--f", "sin", "--q", "2", "--s", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("must lie in"), "{}", stderr(&out));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_hbs"))
        .args(["check", "fixtures/trivial-d1.toml"])
        .env("HBS_THREADS", "zero")
        .current_dir(root())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("HBS_THREADS"));
}

#[test]
fn study_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let out = hbs(&[
        "study",
        "fixtures/families/uniform-d1-p2",
        "--f",
        "sin",
        "--q",
        "2",
        "--s",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("step,level,h,error,order\n"));
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 6 * 3);
    assert!(rows.iter().filter(|r| r.step == 0).all(|r| r.order.is_none()));
    let last = rows.iter().filter(|r| r.step == 5).map(|r| r.order.unwrap()).fold(f64::INFINITY, f64::min);
    assert!(last > 2.8, "order {last}");
}

#[test]
fn dump_mesh_rebuilds_the_same_basis() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["nested-p2-corner", "d1-explicit-knots", "d3-corner"] {
        let out_path = dir.path().join(format!("{name}.json"));
        let fixture = format!("fixtures/{name}.toml");
        let out = hbs(&["dump-mesh", &fixture, "--out", out_path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let dump: MeshDump = read_json(&out_path).unwrap();
        let rebuilt = dump.to_hierarchy().unwrap();
        let original = load_fixture(&root().join(&fixture)).unwrap().hierarchy;
        let (a, _) = build_hierarchical_basis(&original).unwrap();
        let (b, _) = build_hierarchical_basis(&rebuilt).unwrap();
        assert_eq!(a.active, b.active, "{name}");
        assert_eq!(original.mesh(), rebuilt.mesh(), "{name}");
    }
}

#[test]
fn family_generation_matches_the_committed_families() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fam");
    let out = hbs(&["family", "corner", "--degrees", "2,2", "--steps", "5", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for k in 0..5 {
        let name = format!("step-{k:02}.toml");
        let fresh = std::fs::read_to_string(out_dir.join(&name)).unwrap();
        let committed = std::fs::read_to_string(root().join("fixtures/families/corner-d2-p22").join(&name)).unwrap();
        assert_eq!(fresh, committed, "{name}");
    }
}
