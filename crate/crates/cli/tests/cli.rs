//! End-to-end checks of the `prepivot` binary: exit codes, determinism,
//! report formats, and flag/design-file precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prepivot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prepivot-cli-{name}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn kernel_constants_match_closed_form() {
    let out = run(&["kernel-constants", "--kernel", "epanechnikov"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().last().unwrap();
    let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((vals[0] - 0.6).abs() < 1e-8, "R_K = {}", vals[0]);
    assert!((vals[1] - 0.2).abs() < 1e-8, "kappa2 = {}", vals[1]);
    assert!((vals[3] - vals[2].sqrt()).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_one_and_model_errors_exit_two() {
    let out = run(&["mc", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Too few observations for tail-index estimation: a model error.
    let dir = tmp_dir("exit-codes");
    let data = dir.join("short.txt");
    std::fs::write(&data, "1.0\n2.0\n3.0\n4.0\n5.0\n").unwrap();
    let out = run(&[
        "infer",
        "--model",
        "heavy",
        "--data",
        data.to_str().unwrap(),
        "--b1",
        "19",
        "--b2",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn mc_reports_are_deterministic_across_runs_and_workers() {
    let dir = tmp_dir("determinism");
    let args = |out: &Path, workers: &str| {
        vec![
            "mc".to_string(),
            "--model".into(),
            "ma".into(),
            "--sigma".into(),
            "fixed:1.0".into(),
            "--n".into(),
            "40".into(),
            "--reps".into(),
            "60".into(),
            "--b1".into(),
            "39".into(),
            "--b2".into(),
            "19".into(),
            "--seed".into(),
            "42".into(),
            "--workers".into(),
            workers.to_string(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let out1 = dir.join("t1.csv");
    let out2 = dir.join("t2.csv");
    let out8 = dir.join("t8.csv");
    assert!(bin().args(args(&out1, "1")).status().unwrap().success());
    assert!(bin().args(args(&out2, "1")).status().unwrap().success());
    assert!(bin().args(args(&out8, "8")).status().unwrap().success());
    let bytes1 = std::fs::read(&out1).unwrap();
    assert_eq!(bytes1, std::fs::read(&out2).unwrap(), "same invocation differs");
    assert_eq!(bytes1, std::fs::read(&out8).unwrap(), "worker count changes output");
    let text = read(&out1);
    assert!(text.contains("# seed = 42"));
    assert!(text.contains("dist,a,n,scheme,method,level,reject_freq,se,reps,aborts"));
    // Every numeric field round-trips.
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        for field in line.split(',').skip(5) {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite());
        }
    }
}

#[test]
fn design_file_keys_are_overridden_by_flags() {
    let dir = tmp_dir("design-file");
    let design = dir.join("design.cfg");
    std::fs::write(
        &design,
        "# demo\nmodel = ma\nn = 40\nreps = 30\nb1 = 19\nb2 = 9\nmethods = standard\n",
    )
    .unwrap();
    let out = run(&[
        "mc",
        "--design",
        design.to_str().unwrap(),
        "--n",
        "20",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# n = 20"), "flag should override design key:\n{text}");
    assert!(text.contains("# reps = 30"));
    assert!(text.contains("# methods = standard"));
}

#[test]
fn seed_falls_back_to_environment_variable() {
    let args = [
        "mc", "--model", "ma", "--n", "30", "--reps", "20", "--b1", "19", "--b2", "9",
        "--methods", "standard",
    ];
    let with_flag = bin().args(args).args(["--seed", "7"]).output().unwrap();
    let with_env = bin().args(args).env("PREPIVOT_SEED", "7").output().unwrap();
    assert!(with_flag.status.success() && with_env.status.success());
    assert_eq!(stdout(&with_flag), stdout(&with_env));

    let bad_env = bin().args(args).env("PREPIVOT_SEED", "not-a-number").output().unwrap();
    assert_eq!(bad_env.status.code(), Some(1));
}

#[test]
fn infer_emits_a_parseable_report_row() {
    let dir = tmp_dir("infer");
    let data = dir.join("ridge.txt");
    let mut text = String::new();
    // y = x1 + 0.5*x2 + small deterministic wiggle.
    for t in 0..60 {
        let x1 = (t as f64 * 0.7).sin();
        let x2 = (t as f64 * 1.3).cos();
        let y = x1 + 0.5 * x2 + 0.1 * ((t * t) as f64 * 0.31).sin();
        text.push_str(&format!("{y} {x1} {x2}\n"));
    }
    std::fs::write(&data, text).unwrap();
    let out = run(&[
        "infer",
        "--model",
        "ridge",
        "--data",
        data.to_str().unwrap(),
        "--cn",
        "50",
        "--g",
        "1,0",
        "--r",
        "1",
        "--b1",
        "199",
        "--b2",
        "49",
        "--seed",
        "9",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let textout = stdout(&out);
    let header: Vec<&str> = textout
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(
        header,
        ["t_n", "p_hat", "p_plugin", "p_double", "p_right", "p_equal_tailed", "m_hat"]
    );
    let row: Vec<&str> = textout.lines().last().unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    for field in &row {
        let v: f64 = field.parse().unwrap();
        assert!(v.is_finite());
    }
    // Probabilities carry 6 decimals.
    assert_eq!(row[1].split('.').nth(1).unwrap().len(), 6);

    // standard-only runs leave the prepivot columns empty.
    let out = run(&[
        "infer",
        "--model",
        "ridge",
        "--data",
        data.to_str().unwrap(),
        "--cn",
        "50",
        "--b1",
        "99",
        "--b2",
        "9",
        "--methods",
        "standard",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let textout = stdout(&out);
    let row: Vec<&str> = textout.lines().last().unwrap().split(',').collect();
    assert_eq!(row[2], "");
    assert_eq!(row[3], "");
}

#[test]
fn stable_table_alpha_two_matches_gaussian() {
    let out = run(&["stable-table", "--alpha", "2", "--points", "0,1.386"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let at_zero: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!((at_zero - 0.5).abs() < 1e-9);
    // alpha = 2 is N(0, 2): cdf(1.386) = Phi(1.386/sqrt(2)).
    let at_x: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((at_x - 0.836457).abs() < 5e-4, "cdf = {at_x}");
}

#[test]
fn uniformity_report_lists_each_method() {
    let out = run(&[
        "uniformity",
        "--model",
        "heavy",
        "--alpha-estimator",
        "known:1.5",
        "--n",
        "25",
        "--reps",
        "80",
        "--b1",
        "39",
        "--b2",
        "9",
        "--seed",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for method in ["standard", "plugin", "double"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{method},"))),
            "missing {method} row:\n{text}"
        );
    }
}
