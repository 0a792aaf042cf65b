use std::path::Path;
use std::process::{Command, Output};

use voltsec::EquilibriumResult;

fn voltsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voltsec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = voltsec(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn inspect_reports_case_summary() {
    let text = ok(&["inspect", "ieee9"]);
    assert!(text.contains("ieee9"));
    let v: serde_json::Value = serde_json::from_str(&ok(&["inspect", "ieee39", "--json"])).unwrap();
    assert_eq!(v["n_loads"], 29);
    assert_eq!(v["ctrl_buses"], serde_json::json!([5, 6, 7, 8, 10, 11, 13]));
}

#[test]
fn solve_writes_a_readable_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.json");
    ok(&[
        "solve",
        "ieee9",
        "cbbi",
        "--gamma-a",
        "0.1",
        "--gamma-d",
        "1.5",
        "--out",
        path(&out),
    ]);
    let eq = EquilibriumResult::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(eq.u_attacker, 1.0);
    assert_eq!(eq.u_defender, -1.0);
    assert_eq!((eq.gamma_a, eq.gamma_d), (0.1, 1.5));
}

#[test]
fn method_flag_and_positional_agree() {
    let a = ok(&[
        "solve", "ieee9", "--method", "bpega", "--gamma-a", "0.75", "--gamma-d", "0.75",
    ]);
    let b = ok(&["solve", "ieee9", "bpega", "--gamma-a", "0.75", "--gamma-d", "0.75"]);
    assert_eq!(a, b);
    let clash = voltsec(&[
        "solve", "ieee9", "cbbi", "--method", "bpega", "--gamma-a", "1", "--gamma-d", "1",
    ]);
    assert_eq!(clash.status.code(), Some(1));
}

#[test]
fn rd_reports_mismatch_against_the_equilibrium() {
    let text = ok(&[
        "solve", "ieee9", "rd", "--gamma-a", "0.75", "--gamma-d", "0.45", "--gamma-a-est", "0.75",
    ]);
    let eq = EquilibriumResult::from_json(&text).unwrap();
    assert_eq!(eq.metadata.mu_rd, Some(0.0));
    assert_eq!(eq.metadata.gamma_a_est, Some(0.75));
}

#[test]
fn estimate_flag_is_checked_against_the_method() {
    let missing = voltsec(&["solve", "ieee9", "rd", "--gamma-a", "1", "--gamma-d", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    let stray = voltsec(&[
        "solve", "ieee9", "cbbi", "--gamma-a", "1", "--gamma-d", "1", "--gamma-a-est", "0",
    ]);
    assert_eq!(stray.status.code(), Some(1));
    let trace = voltsec(&[
        "solve", "ieee9", "cbbi", "--gamma-a", "1", "--gamma-d", "1", "--trace", "t.csv",
    ]);
    assert_eq!(trace.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(voltsec(&["--help"]).status.code(), Some(0));
    assert_eq!(voltsec(&["solve"]).status.code(), Some(1));
    assert_eq!(voltsec(&["inspect", "no/such/case.json"]).status.code(), Some(3));
    let huge = voltsec(&["solve", "ieee39", "cbbi", "--gamma-a", "0", "--gamma-d", "0"]);
    assert_eq!(huge.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&huge.stderr).contains("bpega"));
}

#[test]
fn sweep_rows_follow_the_grid() {
    let text = ok(&[
        "sweep", "ieee9", "cbbi", "--gamma-a", "0:0.5:1.5", "--gamma-d", "0.3,1.2",
    ]);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0..3], ["gamma_a", "gamma_d", "gamma_a_est"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    assert_eq!((&rows[0][0], &rows[0][1]), ("0", "0.3"));
    assert_eq!((&rows[1][0], &rows[1][1]), ("0", "1.2"));
    assert_eq!(&rows[7][0], "1.5");
}

#[test]
fn empty_grid_writes_only_the_header() {
    let text = ok(&["sweep", "ieee9", "cbbi", "--gamma-a", "", "--gamma-d", "0.3"]);
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn rd_sweep_has_one_row_per_point() {
    let text = ok(&[
        "sweep", "ieee9", "rd", "--gamma-a", "0:0.075:1.5", "--gamma-d", "0.45,0.75,1.5", "--gamma-a-est", "0",
    ]);
    assert_eq!(text.lines().count(), 1 + 63);
}

#[test]
fn trace_lists_each_generation() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let text = ok(&[
        "solve",
        "ieee9",
        "bpega",
        "--gamma-a",
        "0.3",
        "--gamma-d",
        "0.9",
        "--trace",
        path(&trace),
    ]);
    let eq = EquilibriumResult::from_json(&text).unwrap();
    let rows = std::fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(rows, 1 + eq.metadata.generations.unwrap() + 1);
}

#[test]
fn uncertainty_summarizes_each_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("eq.json");
    ok(&[
        "solve",
        "ieee9",
        "--gamma-a",
        "0.75",
        "--gamma-d",
        "0.75",
        "--out",
        path(&eq),
    ]);
    let text = ok(&["uncertainty", "ieee9", path(&eq), "-m", "5"]);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 1 + 5 + 1);
    assert!(rows[6].contains("summary"));

    let zero = ok(&["uncertainty", "ieee9", path(&eq), "--sigma", "0", "-m", "3"]);
    let mut r = csv::Reader::from_reader(zero.as_bytes());
    for rec in r.records().map(Result::unwrap).filter(|r| &r[4] != "summary") {
        assert_eq!(&rec[5], "0");
    }
}

#[test]
fn uncertainty_rejects_a_foreign_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("eq.json");
    ok(&[
        "solve",
        "ieee9",
        "--gamma-a",
        "0.75",
        "--gamma-d",
        "0.75",
        "--out",
        path(&eq),
    ]);
    let out = voltsec(&["uncertainty", "ieee39", path(&eq)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        ok(&[
            "sweep",
            "ieee9",
            "bpega",
            "--gamma-a",
            "0,0.75",
            "--gamma-d",
            "0.45,1.5",
            "--seed",
            "7",
            "--out",
            path(&p),
        ]);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}
