use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnn"))
        .args(args)
        .env_remove("LNN_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn transform_prints_the_real_value() {
    let out = lnn(&["transform", "--x", "1,2,3", "--s", "2"]);
    assert!(out.status.success());
    let value: f64 = stdout(&out).trim().parse().unwrap();
    assert!((value - 7.0 / 3.0).abs() < 1e-15);
}

#[test]
fn transform_of_constant_input_is_exact() {
    let out = lnn(&["transform", "--x", "5,5", "--w", "0.3,2", "--s", "7.3"]);
    assert_eq!(stdout(&out).trim(), "5");
}

#[test]
fn transform_prints_complex_values() {
    let out = lnn(&["transform", "--x", "1,2,3", "--a", "2", "--b", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let (re, im) = text.trim().trim_end_matches('i').split_once('+').unwrap();
    assert!((re.parse::<f64>().unwrap() - 7.0 / 3.0).abs() < 1e-14);
    assert_eq!(im.parse::<f64>().unwrap(), 0.0);
}

#[test]
fn bad_input_is_a_usage_error() {
    assert_eq!(lnn(&["transform", "--x", "1,-2", "--s", "1"]).status.code(), Some(2));
    assert_eq!(lnn(&["transform", "--x", "1,2", "--w", "1", "--s", "1"]).status.code(), Some(2));
    assert_eq!(lnn(&["gradcheck", "--cases", "0"]).status.code(), Some(2));
}

#[test]
fn gradcheck_passes_and_reports_faults() {
    let ok = lnn(&["gradcheck", "--cases", "60", "--layer-cases", "1"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).lines().any(|l| l.starts_with("PASS")));
    assert!(!stdout(&ok).contains("FAIL"));

    let bad = lnn(&["gradcheck", "--cases", "60", "--layer-cases", "1", "--inject-fault", "0.1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("FAIL  real.d_s"));
}

#[test]
fn missing_datasets_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    assert_eq!(lnn(&["crossval", "--dataset", "iris", "--data-dir", root]).status.code(), Some(2));
    assert_eq!(lnn(&["train-mnist", "--data-dir", root]).status.code(), Some(2));
}

fn write_iris_like(path: &Path) {
    let mut text = String::new();
    for i in 0..30 {
        let class = i % 3;
        let base = 1.0 + 2.0 * class as f64;
        let jitter = (i as f64 * 0.37).sin() * 0.3;
        text.push_str(&format!(
            "{:.2},{:.2},{:.2},{:.2},Iris-{}\n",
            base + jitter,
            base - jitter,
            base * 0.5 + jitter,
            base * 0.3,
            ["setosa", "versicolor", "virginica"][class]
        ));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn crossval_metrics_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("small.data");
    write_iris_like(&data);
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = lnn(&[
            "crossval",
            "--dataset",
            data.to_str().unwrap(),
            "--schema",
            "iris",
            "--folds",
            "3",
            "--epochs",
            "5",
            "--lau",
            "complex",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("complex LAU"));
        lnn_core::train::metrics::strip_timing(&fs::read_to_string(out_path).unwrap())
    };
    let (a, b) = (run("a.jsonl"), run("b.jsonl"));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 3 + 1);
    assert!(!a.contains("wall_time"));
}
