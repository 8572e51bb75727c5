//! End-to-end tests that drive the `advtree` binary the way a user would.

use advtree_core::transfer::load_transfer_set;
use advtree_core::PolicyTree;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn advtree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advtree"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn advtree")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = advtree(dir, args);
    assert!(
        out.status.success(),
        "advtree {args:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(dir: &Path, args: &[&str]) -> String {
    let out = advtree(dir, args);
    assert!(!out.status.success(), "expected advtree {args:?} to fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Trains a deliberately small CartPole teacher; quality does not matter
/// here, only that the pipeline runs end to end.
fn tiny_teacher(dir: &Path) -> PathBuf {
    run_ok(
        dir,
        &[
            "train-teacher",
            "--task",
            "cartpole",
            "--out",
            "teacher.txt",
            "--seed",
            "7",
            "--episodes",
            "200",
            "--bins",
            "4,4,6,6",
            "--eval-episodes",
            "0",
        ],
    );
    dir.join("teacher.txt")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("task,"))
        .collect()
}

#[test]
fn pipeline_artifacts_round_trip_and_distill_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);

    let stdout = run_ok(
        dir,
        &[
            "collect", "--teacher", "teacher.txt", "--task", "cartpole", "--samples", "400",
            "--seed", "3", "--out", "transfer.txt",
        ],
    );
    assert!(stdout.contains("saved"), "{stdout}");
    let samples = load_transfer_set(&dir.join("transfer.txt")).unwrap();
    assert!(samples.len() >= 400);

    for out in ["t1.txt", "t2.txt"] {
        run_ok(
            dir,
            &[
                "distill", "--transfer", "transfer.txt", "--algorithm", "Dpic", "--max-nodes",
                "31", "--out", out,
            ],
        );
    }
    let t1 = std::fs::read(dir.join("t1.txt")).unwrap();
    let t2 = std::fs::read(dir.join("t2.txt")).unwrap();
    assert_eq!(t1, t2, "same distill invocation must write identical tree files");

    let tree = PolicyTree::load(&dir.join("t1.txt")).unwrap();
    assert_eq!(tree.n_features, 4);
    assert_eq!(tree.n_actions, 2);

    let report = run_ok(
        dir,
        &[
            "evaluate", "--tree", "t1.txt", "--task", "cartpole", "--episodes", "5", "--teacher",
            "teacher.txt", "--mmd-states", "80", "--out", "report.json",
        ],
    );
    assert!(report.contains("mean_return"), "{report}");
    assert!(report.contains("mmd"), "{report}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["episodes"], 5);
    assert_eq!(json["internal_nodes"].as_u64().unwrap() + 1, json["leaf_count"].as_u64().unwrap());
    assert!(json["mmd"].as_f64().unwrap() >= 0.0);

    run_ok(
        dir,
        &[
            "importance", "--tree", "t1.txt", "--task", "cartpole", "--out-json", "imp.json",
            "--out-rules", "rules.txt",
        ],
    );
    let imp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("imp.json")).unwrap()).unwrap();
    let total: f64 = imp["importance"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "importance sums to {total}");
    assert_eq!(imp["features"][2], "pole_angle");
    let rules = std::fs::read_to_string(dir.join("rules.txt")).unwrap();
    assert!(rules.starts_with("# advtree importance"), "{rules}");
    assert!(rules.lines().any(|l| l.starts_with("IF ") && l.contains("THEN action=")));
}

#[test]
fn grid_writes_one_row_per_cell_and_restarts_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);
    std::fs::write(
        dir.join("grid.conf"),
        "task = cartpole\nalgorithms = BC\nmax_nodes = 1\nruns = 10\n\
         eval_episodes = 2\nn_samples = 120\nmmd_states = 60\nseed = 5\n\
         teacher = teacher.txt\nout_dir = out\n",
    )
    .unwrap();

    run_ok(dir, &["grid", "--config", "grid.conf"]);
    let csv_path = dir.join("out/grid.csv");
    let full = std::fs::read_to_string(&csv_path).unwrap();
    let rows = data_rows(&full);
    assert_eq!(rows.len(), 10, "one row per run:\n{full}");
    for (run, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("cartpole,BC,1,,{run},")), "{row}");
    }

    // Drop three finished cells; the rerun must recompute exactly those and
    // reproduce the original file byte for byte.
    let truncated: String = full
        .lines()
        .filter(|l| {
            !(l.starts_with("cartpole,BC,1,,2,")
                || l.starts_with("cartpole,BC,1,,5,")
                || l.starts_with("cartpole,BC,1,,9,"))
        })
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&csv_path, &truncated).unwrap();

    let out = advtree(dir, &["grid", "--config", "grid.conf"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("running 3 cells"), "{stderr}");
    let rerun = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(rerun, full, "restart must reproduce the interrupted grid exactly");
}

#[test]
fn grid_records_and_reuses_the_chosen_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);
    std::fs::write(
        dir.join("grid.conf"),
        "task = cartpole\nalgorithms = DpicR\nmax_nodes = 1,3\nruns = 2\n\
         alphas = 0.02,0.1\neval_episodes = 3\nn_samples = 150\nmmd_states = 60\n\
         seed = 2\nteacher = teacher.txt\nout_dir = out\n",
    )
    .unwrap();

    run_ok(dir, &["grid", "--config", "grid.conf"]);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("out/alpha_report.json")).unwrap(),
    )
    .unwrap();
    let entry = &report["cartpole/DpicR"];
    let chosen = entry["alpha"].as_f64().unwrap();
    assert!(chosen == 0.02 || chosen == 0.1, "{entry}");
    assert_eq!(entry["mean_return_by_alpha"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(dir.join("out/grid.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let alpha: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(alpha, chosen, "{row}");
    }

    // A fresh grid with the report intact must skip tuning and reuse the
    // recorded alpha.
    std::fs::remove_file(dir.join("out/grid.csv")).unwrap();
    let out = advtree(dir, &["grid", "--config", "grid.conf"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("using recorded alpha"), "{stderr}");
    assert!(!stderr.contains("tuning alpha"), "{stderr}");
    let rows2 = std::fs::read_to_string(dir.join("out/grid.csv")).unwrap();
    assert_eq!(data_rows(&rows2).len(), 4);
}

#[test]
fn flags_override_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);
    std::fs::write(
        dir.join("grid.conf"),
        "task = cartpole\nalgorithms = BC\nmax_nodes = 1\nruns = 4\n\
         eval_episodes = 2\nn_samples = 120\nmmd_states = 60\n\
         teacher = teacher.txt\nout_dir = out\n",
    )
    .unwrap();
    run_ok(dir, &["grid", "--config", "grid.conf", "--runs", "1"]);
    let csv = std::fs::read_to_string(dir.join("out/grid.csv")).unwrap();
    assert_eq!(data_rows(&csv).len(), 1, "--runs must beat the config file:\n{csv}");
}

#[test]
fn iterated_distill_records_its_best_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);
    run_ok(
        dir,
        &[
            "distill", "--teacher", "teacher.txt", "--task", "cartpole", "--algorithm", "DpicM",
            "--max-nodes", "3", "--samples", "150", "--iterations", "2", "--eval-episodes", "3",
            "--seed", "4", "--out", "loop.txt",
        ],
    );
    let text = std::fs::read_to_string(dir.join("loop.txt")).unwrap();
    assert!(text.contains("# iterations = 2"), "{text}");
    assert!(text.contains("# best_iteration = "), "{text}");
    PolicyTree::load(&dir.join("loop.txt")).unwrap();
}

#[test]
fn bad_inputs_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    tiny_teacher(dir);
    run_ok(
        dir,
        &[
            "collect", "--teacher", "teacher.txt", "--task", "cartpole", "--samples", "60",
            "--seed", "1", "--out", "transfer.txt",
        ],
    );

    let err = run_err(
        dir,
        &["distill", "--transfer", "transfer.txt", "--algorithm", "id3", "--max-nodes", "1", "--out", "x"],
    );
    assert!(err.contains("unknown algorithm"), "{err}");

    let err = run_err(
        dir,
        &["distill", "--transfer", "transfer.txt", "--algorithm", "DpicR", "--max-nodes", "1", "--out", "x"],
    );
    assert!(err.contains("alpha"), "{err}");

    let err = run_err(
        dir,
        &["distill", "--transfer", "transfer.txt", "--algorithm", "ViperM", "--max-nodes", "1", "--out", "x"],
    );
    assert!(err.contains("--teacher"), "{err}");

    std::fs::write(dir.join("bad.conf"), "algorthim = BC\n").unwrap();
    let err = run_err(
        dir,
        &["distill", "--config", "bad.conf", "--transfer", "transfer.txt", "--algorithm", "BC", "--max-nodes", "1", "--out", "x"],
    );
    assert!(err.contains("algorthim"), "{err}");

    // A CartPole tree cannot be evaluated on a 2-feature task.
    run_ok(
        dir,
        &["distill", "--transfer", "transfer.txt", "--algorithm", "BC", "--max-nodes", "1", "--out", "t.txt"],
    );
    let err = run_err(dir, &["evaluate", "--tree", "t.txt", "--task", "mountain_car", "--episodes", "1"]);
    assert!(err.contains("does not match"), "{err}");
}
