use std::path::Path;

use cdcp_core::cli::run;
use cdcp_core::scenario::{bundled, read_json_report, ComparisonReport, SolveReport};
use serde_json::Value;

fn cdcp(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cdcp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn rural_with(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let mut doc: Value = serde_json::from_str(&bundled("rural").unwrap().file.to_json()).unwrap();
    edit(&mut doc);
    let path = dir.join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_succeeds_on_bundled_name() {
    let (code, out, err) = cdcp(&["solve", "rural"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["metadata"]["command"], "solve");
    assert_eq!(v["solution"]["method"], "Opt");
    assert_eq!(v["solution"]["feasible"], true);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let (code, _, err) = cdcp(&["launch", "rural"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn bad_flag_values_are_usage_errors() {
    assert_eq!(cdcp(&["solve", "rural", "--format", "xml"]).0, 2);
    assert_eq!(cdcp(&["compare", "rural", "--pois", "many"]).0, 2);
    assert_eq!(cdcp(&["solve"]).0, 2);
}

#[test]
fn degenerate_scenario_exits_2_naming_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = rural_with(dir.path(), |d| d["request"]["min_altitude"] = 1000.0.into());
    let (code, out, err) = cdcp(&["solve", &path]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("degenerate feasible region"), "{err}");
}

#[test]
fn invalid_fields_exit_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = rural_with(dir.path(), |d| d["request"]["dis_max"] = 0.0.into());
    let (code, _, err) = cdcp(&["solve", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("dis_max"), "{err}");

    let path = rural_with(dir.path(), |d| d["uav"]["tx_power"] = 30.0.into());
    let (code, _, err) = cdcp(&["solve", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("power class"), "{err}");

    let path = rural_with(dir.path(), |d| d["surprise"] = 1.into());
    let (code, _, err) = cdcp(&["solve", &path]);
    assert_eq!(code, 2);
    assert!(err.contains("surprise"), "{err}");
}

#[test]
fn io_failures_exit_1() {
    assert_eq!(cdcp(&["solve", "/nonexistent/scenario.json"]).0, 1);
    let (code, _, err) = cdcp(&["solve", "rural", "--out", "/nonexistent/dir/report.json"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn out_file_round_trips_and_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solve.json");
    let (code, _, _) = cdcp(&["solve", "rural", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (_, stdout, _) = cdcp(&["solve", "rural", "--seed", "3"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
    let report: SolveReport = read_json_report(&path).unwrap();
    assert_eq!(report.metadata.seed, 3);
}

#[test]
fn compare_csv_has_a_row_per_method_and_poi() {
    let (code, out, err) = cdcp(&["compare", "rural", "--pois", "3", "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<_> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(lines[0].starts_with("poi,method,"), "{}", lines[0]);
    assert_eq!(lines.len(), 1 + 3 * 5);
}

#[test]
fn compare_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let a = cdcp(&["compare", "rural", "--pois", "4"]).1;
    assert_eq!(a, cdcp(&["compare", "rural", "--pois", "4"]).1);
    assert_ne!(a, cdcp(&["compare", "rural", "--pois", "4", "--seed", "99"]).1);
    let path = dir.path().join("c.json");
    cdcp(&["compare", "rural", "--pois", "4", "--out", path.to_str().unwrap()]);
    let report: ComparisonReport = read_json_report(&path).unwrap();
    assert_eq!(report.rows.len(), 20);
    assert_eq!(report.summary.pois, 4);
}

#[test]
fn simulate_and_oracle_run() {
    let (code, out, err) = cdcp(&["simulate", "rural"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(!v["samples"].as_array().unwrap().is_empty());
    assert!(v["staleness"].is_object());

    let (code, out, err) = cdcp(&["oracle", "rural", "--resolution", "5"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["grid"]["location_points"], 5);
}

#[test]
fn oversized_oracle_grid_is_rejected() {
    let (code, _, err) = cdcp(&["oracle", "rural", "--resolution", "1000"]);
    assert_eq!(code, 2);
    assert!(err.contains("guard"), "{err}");
}
