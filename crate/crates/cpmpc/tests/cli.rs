use std::path::{Path, PathBuf};

use cpmpc::cli::{self, load_trajectory, EXIT_ERROR, EXIT_NOT_RECOVERED, EXIT_OK, EXIT_PROPERTY_FAILED};
use cpmpc::plots::PLOT_FILES;
use cpmpc::summary::Summary;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("cpmpc").chain(args.iter().copied()))
}

fn simulate(path: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["simulate", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn scenario1_recovers_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&scenario("scenario1"), dir.path(), &[]), EXIT_OK);

    let log = load_trajectory(&dir.path().join("trajectory.csv")).unwrap();
    assert!(log.len() >= 30, "{} rows", log.len());

    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.success);
    assert_eq!(summary.periods + 1, log.len());
    assert_eq!(summary.plant, "matched");

    for name in PLOT_FILES {
        let svg = std::fs::read_to_string(dir.path().join("plots").join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn format_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&scenario("scenario1"), dir.path(), &["--format", "json"]), EXIT_OK);
    assert!(dir.path().join("summary.json").exists());
    assert!(!dir.path().join("trajectory.csv").exists());
    assert!(!dir.path().join("plots").exists());
}

#[test]
fn plant_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&scenario("scenario1"), dir.path(), &["--plant", "continuous", "--format", "json"]);
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.plant, "continuous");
}

#[test]
fn overload_is_not_recovered() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(&scenario("overload"), dir.path(), &[]), EXIT_NOT_RECOVERED);
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(!summary.success);
    assert!(summary.solver.infeasible > 0);
    assert!(!summary.failures.is_empty());
}

#[test]
fn bad_scenarios_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let out = dir.path().join("out");
    for text in [
        "{ \"version\": 1, ",
        r#"{ "version": 2 }"#,
        r#"{ "version": 1, "robot": { "mas": 98.0 } }"#,
        r#"{ "version": 1, "robot": { "mass": -1.0 } }"#,
        r#"{ "version": 1, "disturbances": [ { "force": [10.0, 0.0], "duration": -0.1 } ] }"#,
        r#"{ "version": 1, "mpc": { "tolerance": 0.0 } }"#,
    ] {
        std::fs::write(&bad, text).unwrap();
        assert_eq!(simulate(&bad, &out, &[]), EXIT_ERROR, "{text}");
    }
    assert_eq!(simulate(&dir.path().join("missing.json"), &out, &[]), EXIT_ERROR);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&[]), EXIT_ERROR);
    assert_eq!(run(&["simulate"]), EXIT_ERROR);
    assert_eq!(run(&["simulate", "--scenario", "x.json", "--out", "o", "--plant", "rigid"]), EXIT_ERROR);
    assert_eq!(run(&["frobnicate"]), EXIT_ERROR);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn verify_passes_on_a_small_sample() {
    assert_eq!(run(&["verify", "--seed", "7", "--count", "50"]), EXIT_OK);
    assert_ne!(EXIT_PROPERTY_FAILED, EXIT_OK);
}

#[test]
fn plot_renders_a_written_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&scenario("scenario2b"), dir.path(), &["--format", "csv"]);
    let plots = dir.path().join("replot");
    let input = dir.path().join("trajectory.csv");
    assert_eq!(run(&["plot", "--input", input.to_str().unwrap(), "--out", plots.to_str().unwrap()]), EXIT_OK);
    for name in PLOT_FILES {
        assert!(plots.join(name).exists(), "{name}");
    }
}

#[test]
fn plot_rejects_malformed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plots");
    let out = out.to_str().unwrap();
    let cases = [
        ("empty.csv", String::new()),
        ("header.csv", "time,x_com\n0,0\n".to_string()),
        ("headeronly.csv", cpmpc::trajectory_csv::COLUMNS.join(",") + "\n"),
        ("short.csv", cpmpc::trajectory_csv::COLUMNS.join(",") + "\n0,1,2\n"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        assert_eq!(run(&["plot", "--input", path.to_str().unwrap(), "--out", out]), EXIT_ERROR, "{name}");
    }
    assert_eq!(run(&["plot", "--input", dir.path().join("nope.csv").to_str().unwrap(), "--out", out]), EXIT_ERROR);
}
