//! End-to-end tests of the `evgp` binary: simulate -> train ->
//! evaluate -> inspect, plus validation failure modes and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn evgp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evgp"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn evgp");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> usize {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().count() - 1 // header
}

fn simulate_small(dir: &Path, name: &str, trajectories: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    run_ok(evgp().args([
        "simulate",
        "--system",
        "pendulum",
        "--trajectories",
        &trajectories.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]));
    out
}

#[test]
fn simulate_writes_expected_row_counts_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate_small(dir.path(), "pend.csv", 5, 7);
    assert_eq!(csv_rows(&out), 500);
    let sidecar = dir.path().join("pend.json");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["sampling"]["dt"], 0.03);
}

#[test]
fn simulate_table1_preset_has_4800_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("full.csv");
    run_ok(evgp().args([
        "simulate",
        "--system",
        "pendulum",
        "--preset",
        "table1",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(csv_rows(&out), 4800);
}

#[test]
fn simulate_without_system_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let result = evgp()
        .args(["simulate", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("--system"));
}

#[test]
fn train_evaluate_inspect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = simulate_small(dir.path(), "train.csv", 4, 1);
    let test_csv = simulate_small(dir.path(), "test.csv", 2, 99);
    let model = dir.path().join("model.json");
    let report = dir.path().join("report.json");
    run_ok(evgp().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--prior",
        "ifg",
        "--m",
        "8",
        "--steps",
        "80",
        "--batch-size",
        "100",
        "--seed",
        "1",
        "--out",
        model.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]));
    assert!(model.exists());
    let report_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report_json["elbo_trace"].as_array().unwrap().len(), 80);

    // determinism: retraining with the same seed gives a byte-identical trace
    let report2 = dir.path().join("report2.json");
    run_ok(evgp().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--prior",
        "ifg",
        "--m",
        "8",
        "--steps",
        "80",
        "--batch-size",
        "100",
        "--seed",
        "1",
        "--out",
        model.to_str().unwrap(),
        "--report",
        report2.to_str().unwrap(),
    ]));
    let a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report2).unwrap()).unwrap();
    assert_eq!(a["elbo_trace"], b["elbo_trace"]);

    let eval_out = dir.path().join("eval.json");
    let out = run_ok(evgp().args([
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--data",
        test_csv.to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
    ]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("CR-1/2/3"));
    let eval_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&eval_out).unwrap()).unwrap();
    assert!(eval_json["cr1"].as_f64().unwrap() <= eval_json["cr3"].as_f64().unwrap());

    let out = run_ok(evgp().args(["inspect", "--model", model.to_str().unwrap()]));
    let text = String::from_utf8_lossy(&out.stdout);
    for label in ["q1", "dq1", "u", "sin1"] {
        assert!(text.contains(label), "missing feature label {label}");
    }
}

#[test]
fn evaluate_with_mismatched_schema_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = simulate_small(dir.path(), "train.csv", 2, 1);
    let model = dir.path().join("model.json");
    run_ok(evgp().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--prior",
        "none",
        "--m",
        "5",
        "--steps",
        "10",
        "--batch-size",
        "50",
        "--out",
        model.to_str().unwrap(),
    ]));
    // toy-format CSV has different columns than the pendulum schema
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y_val\n0.0,1.0\n1.0,2.0\n").unwrap();
    let result = evgp()
        .args([
            "evaluate",
            "--model",
            model.to_str().unwrap(),
            "--data",
            bad.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("schema"));
}

#[test]
fn train_vgp_baseline_without_system_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    // hand-written dataset with no sidecar: --prior none needs neither
    // system nor dt
    let mut text = String::from("x,y_val\n");
    for i in 0..60 {
        let x = i as f64 * 0.1;
        text.push_str(&format!("{x},{}\n", 3.0 * x + (2.0 * x).sin()));
    }
    std::fs::write(&csv, text).unwrap();
    let model = dir.path().join("vgp.json");
    run_ok(evgp().args([
        "train",
        "--data",
        csv.to_str().unwrap(),
        "--prior",
        "none",
        "--m",
        "6",
        "--steps",
        "30",
        "--batch-size",
        "60",
        "--out",
        model.to_str().unwrap(),
    ]));
    let out = run_ok(evgp().args(["inspect", "--model", model.to_str().unwrap()]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("zero-mean baseline"));
}

#[test]
fn train_if_prior_without_dt_or_sidecar_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nosidecar.csv");
    std::fs::write(&csv, "q1,dq1,u1,y_q1,y_dq1\n0,0,0,0,0\n0.1,0,0,0.1,0\n").unwrap();
    let result = evgp()
        .args([
            "train",
            "--data",
            csv.to_str().unwrap(),
            "--prior",
            "if",
            "--out",
            dir.path().join("m.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn checkpoints_are_written_on_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = simulate_small(dir.path(), "train.csv", 2, 3);
    let model = dir.path().join("model.json");
    run_ok(evgp().args([
        "train",
        "--data",
        train_csv.to_str().unwrap(),
        "--prior",
        "none",
        "--m",
        "4",
        "--steps",
        "20",
        "--batch-size",
        "50",
        "--checkpoint-every",
        "10",
        "--checkpoint-dir",
        dir.path().to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]));
    for output in 0..2 {
        for step in [10, 20] {
            assert!(
                dir.path()
                    .join(format!("checkpoint-output{output}-step{step}.json"))
                    .exists(),
                "missing checkpoint output {output} step {step}"
            );
        }
    }
}

#[test]
fn bench_tiny_matrix_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = run_ok(evgp().args([
        "bench",
        "--system",
        "pendulum",
        "--models",
        "evgp-if",
        "--sizes",
        "100,200",
        "--seeds",
        "0",
        "--test-size",
        "100",
        "--steps",
        "20",
        "--batch-size",
        "50",
        "--m",
        "6",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("evgp-if"));
    for file in ["results.json", "table.txt", "series.csv"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let csv = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert!(csv.contains("evgp-if,100"));
    assert!(csv.contains("evgp-if,200"));
}

#[test]
fn config_file_values_are_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out_cfg = dir.path().join("from_config.csv");
    let config = dir.path().join("sim.json");
    std::fs::write(
        &config,
        format!(
            "{{\"system\": \"pendulum\", \"trajectories\": 3, \"seed\": 5, \"out\": {:?}}}",
            out_cfg.to_str().unwrap()
        ),
    )
    .unwrap();
    run_ok(evgp().args(["simulate", "--config", config.to_str().unwrap()]));
    assert_eq!(csv_rows(&out_cfg), 300);

    // flag overrides the config's trajectory count
    let out_flag = dir.path().join("from_flag.csv");
    run_ok(evgp().args([
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--trajectories",
        "2",
        "--out",
        out_flag.to_str().unwrap(),
    ]));
    assert_eq!(csv_rows(&out_flag), 200);

    // unknown keys in the config are rejected
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"system\": \"pendulum\", \"bogus\": 1}").unwrap();
    let result = evgp()
        .args(["simulate", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}
