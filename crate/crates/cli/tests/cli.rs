//! End-to-end checks of the command-line contract: exit codes, report
//! shapes, and error messages.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ga-rss"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_tmp(name: &str, content: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("ga-rss-test-{name}-{}", std::process::id()));
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn unknown_machine_is_a_usage_error() {
    let out = run(&["check", "--machines", "NOPE"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NOPE"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_b_min_is_a_config_error_naming_the_field() {
    let cfg = write_tmp("bmin", "[constants]\nb_min = 0\n");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b_min"));
}

#[test]
fn initial_state_violating_the_precondition_is_rejected() {
    let cfg = write_tmp("badinit", "subscenario = \"S4\"\n[init]\nx = 99\nv = 20\n");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precond"));
}

#[test]
fn default_simulate_reaches_the_goal_exactly() {
    let out = run(&["simulate", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let last = stdout.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    assert_eq!(cols[1], "100"); // x_sv
    assert_eq!(cols[2], "0"); // v_sv
    assert!(String::from_utf8_lossy(&out.stderr).contains("GOAL"));
}

#[test]
fn simulate_with_zero_budget_exits_as_no_verdict() {
    let out = run(&["simulate", "--max-cycles", "0"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn mutated_decision_module_fails_with_a_counterexample() {
    let out = run(&[
        "check",
        "--machines",
        "M41",
        "--mutate",
        "dm-one-cycle-lookahead",
        "--budget",
        "20000",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL"));
    assert!(stderr.contains("x_sv="));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.contains("\"status\":\"FAIL\"")
        && l.contains("\"counterexample\":{")));
}

#[test]
fn clean_machines_pass_and_report_jsonl() {
    let out = run(&["check", "--machines", "M40,M30", "--budget", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 10); // 4 + 6 obligations
    for line in stdout.lines() {
        assert!(line.contains("\"status\":\"PASS\""));
    }
}

#[test]
fn one_point_sweep_emits_a_single_csv_row() {
    let cfg = write_tmp(
        "lat1",
        "subscenario = \"S4\"\n[lattice]\nxs = [50]\nvs = [10]\n",
    );
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "x,v,gap,status,cycles");
    assert!(lines[1].starts_with("50,10,,GOAL,"));
}

#[test]
fn sweep_where_every_point_is_skipped_reports_nothing_ran() {
    let cfg = write_tmp(
        "latskip",
        "subscenario = \"S4\"\n[lattice]\nxs = [99]\nvs = [20]\n",
    );
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing ran"));
}

#[test]
fn sweep_without_a_lattice_is_a_usage_error() {
    let out = run(&["sweep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_machines_lists_the_inventory() {
    let out = run(&["export-machines"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout.contains("\"machine\":\"M42\""));
}

#[test]
fn flags_override_environment_and_config() {
    let cfg = write_tmp("seed5", "seed = 5\n");
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--seed", "7"])
        .env("GA_RSS_SEED", "6")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let first = String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(first.contains("\"seed\":7"));

    // environment beats the file when no flag is given
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("GA_RSS_SEED", "6")
        .output()
        .unwrap();
    let first = String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(first.contains("\"seed\":6"));
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let a = run(&["simulate", "--seed", "11"]);
    let b = run(&["simulate", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
}
