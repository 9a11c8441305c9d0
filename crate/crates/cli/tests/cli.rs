//! End-to-end CLI behavior: flag handling, config layering, seed fallback,
//! output files, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extragrad"))
}

fn temp_path(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("extragrad_cli_{tag}_{}.tmp", std::process::id()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn CLI");
    assert!(
        out.status.success(),
        "expected success, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn list_names_every_algorithm_and_example() {
    let out = run_ok(bin().arg("list"));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in [
        "isegm", "itegm", "cor1", "cor2", "hsegm", "vsegm", "vtegm", "stegm",
    ] {
        assert!(text.contains(id), "missing {id}");
    }
    for ex in ["ex1", "ex2", "ex3"] {
        assert!(text.contains(ex));
    }
}

#[test]
fn run_emits_header_and_rows_to_stdout() {
    let out = run_ok(bin().args(["run", "--example", "ex1", "--seed", "3", "--max-iter", "7"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = extragrad::harness::parse_csv_str(&text).unwrap();
    assert_eq!(doc.rows.len(), 7);
    assert!(doc.rows.iter().all(|r| r.algorithm == "ISEGM"));
    assert!(doc.comments.iter().any(|c| c == "seed=3"));
}

#[test]
fn run_requires_exactly_one_algorithm() {
    let out = bin()
        .args(["run", "--example", "ex1", "--algorithms", "isegm,itegm"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("exactly one algorithm"), "stderr: {err}");
}

#[test]
fn compare_writes_file_with_all_algorithms() {
    let path = temp_path("compare");
    run_ok(bin().args([
        "compare",
        "--example",
        "ex1",
        "--seed",
        "2",
        "--max-iter",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&path).unwrap();
    fs::remove_file(&path).ok();
    let doc = extragrad::harness::parse_csv_str(&text).unwrap();
    // 8 algorithms x 5 iterations
    assert_eq!(doc.rows.len(), 40);
    let first_errors: Vec<f64> = doc
        .rows
        .iter()
        .filter(|r| r.k == 1)
        .map(|r| r.d_k.unwrap())
        .collect();
    assert_eq!(first_errors.len(), 8);
    assert!(
        first_errors.iter().all(|d| *d == first_errors[0]),
        "shared start"
    );
}

#[test]
fn config_file_layers_under_flags() {
    let path = temp_path("config");
    fs::write(
        &path,
        "example = ex1\nseed = 3\nmax_iter = 4\nalgorithms = itegm\n",
    )
    .unwrap();
    let out = run_ok(bin().args(["run", "--config", path.to_str().unwrap(), "--seed", "9"]));
    fs::remove_file(&path).ok();
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = extragrad::harness::parse_csv_str(&text).unwrap();
    // flag wins over the file for the seed; the file supplies the rest
    assert!(doc.comments.iter().any(|c| c == "seed=9"));
    assert_eq!(doc.rows.len(), 4);
    assert!(doc.rows.iter().all(|r| r.algorithm == "ITEGM"));
}

#[test]
fn env_seed_is_a_fallback_and_flag_wins() {
    let out = run_ok(
        bin()
            .args(["run", "--example", "ex1", "--max-iter", "2"])
            .env("VI_SOLVE_SEED", "77"),
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# seed=77"));

    let out = run_ok(
        bin()
            .args(["run", "--example", "ex1", "--max-iter", "2", "--seed", "5"])
            .env("VI_SOLVE_SEED", "77"),
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# seed=5"));

    let out = bin()
        .args(["run", "--example", "ex1"])
        .env("VI_SOLVE_SEED", "not-a-number")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn unknown_algorithm_and_example_fail() {
    let out = bin().args(["run", "--example", "ex9"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args(["run", "--example", "ex1", "--algorithms", "sgd"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args(["compare", "--example", "ex2"])
        .output()
        .unwrap();
    assert!(!out.status.success(), "ex2 without --n must fail");
    let out = bin()
        .args(["run", "--example", "ex1", "--preset", "fancy"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn paper_preset_flag_is_accepted() {
    let out = run_ok(bin().args([
        "run",
        "--example",
        "ex1",
        "--preset",
        "paper",
        "--max-iter",
        "2",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# xi=0.4"));
    assert!(text.contains("# psi1=0.9"));
    assert!(text.contains("# armijo_phi=0.4"));
}

#[test]
fn validate_passes_on_ex1_and_fails_on_corrupted_sigma() {
    let out = run_ok(bin().args(["validate", "--example", "ex1", "--max-iter", "50"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));

    let path = temp_path("sigma");
    fs::write(&path, "example = ex1\nsigma = 5\n").unwrap();
    let out = bin()
        .args(["validate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    fs::remove_file(&path).ok();
    assert!(!out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL selector_sigma_bound"));
}

#[test]
fn early_stop_tolerance_short_circuits() {
    let out = run_ok(bin().args([
        "run",
        "--example",
        "ex1",
        "--seed",
        "4",
        "--tol",
        "1e-6",
        "--max-iter",
        "400",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = extragrad::harness::parse_csv_str(&text).unwrap();
    assert!(doc.rows.len() < 400, "stopped early at tol");
}

#[test]
fn named_start_on_grid_example() {
    let out = run_ok(bin().args([
        "run",
        "--example",
        "ex3",
        "--points",
        "64",
        "--start",
        "t2",
        "--max-iter",
        "5",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# start=t2"));
    // named starts are rejected off the grid
    let out = bin()
        .args(["run", "--example", "ex1", "--start", "expt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
