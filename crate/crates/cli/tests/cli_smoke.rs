//! End-to-end smoke tests of the binary: exit codes and a tiny
//! gen-data -> train -> plan round trip.

use latent_cmp::bench::gen_problems;
use latent_cmp::scenario::{ScenarioDef, ScenarioId};
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latent-cmp"))
}

#[test]
fn unknown_scenario_is_a_configuration_error() {
    let out = bin()
        .args(["gen-data", "--scenario", "s9", "--out", "/tmp/nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_results_csv_is_an_io_error() {
    let out = bin()
        .args(["report", "--in", "/definitely/missing/results.csv", "--out", "/tmp/nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_planner_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let problems = gen_problems(&ScenarioDef::new(ScenarioId::S1), 1, 7).unwrap();
    let problem_path = dir.path().join("problem.json");
    std::fs::write(
        &problem_path,
        serde_json::to_string(&problems[0]).unwrap(),
    )
    .unwrap();
    let out = bin()
        .args([
            "plan",
            "--scenario",
            "s1",
            "--problem",
            problem_path.to_str().unwrap(),
            "--planner",
            "prm",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn run_ok(dir: &Path, args: &[&str]) {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn tiny_pipeline_gen_train_plan_bench_report() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    run_ok(
        root,
        &[
            "gen-data",
            "--scenario",
            "s1",
            "--out",
            "data",
            "--envs",
            "3",
            "--manifold",
            "250",
            "--per-env",
            "16",
            "--seed",
            "5",
        ],
    );
    assert!(root.join("data/dataset.cmpd").exists());
    assert!(root.join("data/cvae.cmpw").exists());

    // The labeling autoencoder doubles as the planning model dir entry.
    std::fs::create_dir_all(root.join("models")).unwrap();
    std::fs::copy(root.join("data/cvae.cmpw"), root.join("models/cvae.cmpw")).unwrap();
    for (model, file) in [("validity", "validity.cmpw"), ("distance", "distance.cmpw")] {
        run_ok(
            root,
            &[
                "train",
                "--scenario",
                "s1",
                "--model",
                model,
                "--data",
                "data",
                "--out",
                &format!("models/{file}"),
                "--epochs",
                "3",
                "--seed",
                "5",
            ],
        );
    }

    // One cheap problem, planned with both planner families.
    let problems = gen_problems(&ScenarioDef::new(ScenarioId::S1), 1, 11).unwrap();
    std::fs::write(
        root.join("problem.json"),
        serde_json::to_string(&problems[0]).unwrap(),
    )
    .unwrap();
    let out = bin()
        .current_dir(root)
        .args([
            "plan",
            "--scenario",
            "s1",
            "--problem",
            "problem.json",
            "--planner",
            "cbirrt2",
            "--time-limit",
            "30",
        ])
        .output()
        .unwrap();
    let code = out.status.code();
    assert!(
        code == Some(0) || code == Some(1),
        "unexpected exit {code:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    run_ok(
        root,
        &[
            "bench",
            "--scenario",
            "s1",
            "--planners",
            "lcbirrt,lcbirrt-lpo:5",
            "--problems",
            "2",
            "--models",
            "models",
            "--out",
            "bench_out",
            "--time-limit",
            "20",
            "--seed",
            "3",
        ],
    );
    assert!(root.join("bench_out/results.csv").exists());
    assert!(root.join("bench_out/summary.md").exists());
    assert!(root.join("bench_out/fig6_analog.svg").exists());
    assert!(root.join("bench_out/problems.json").exists());

    run_ok(
        root,
        &[
            "report",
            "--in",
            "bench_out/results.csv",
            "--out",
            "report_out",
        ],
    );
    assert!(root.join("report_out/summary.md").exists());
}
