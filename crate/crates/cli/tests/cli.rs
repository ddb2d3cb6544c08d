//! End-to-end checks of the command-line interface: exit codes, artifact
//! formats, and the generate → train → infer → compare round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_priorcvae"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("priorcvae_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed ({:?}):\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap_or(-1)
}

#[test]
fn zero_count_is_a_usage_error() {
    let dir = tmp_dir("zero_count");
    let out = bin()
        .args([
            "generate",
            "--preset",
            "gp1d-matern52",
            "--count",
            "0",
            "--out",
        ])
        .arg(dir.join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let dir = tmp_dir("bad_preset");
    let out = bin()
        .args(["generate", "--preset", "nope", "--count", "5", "--out"])
        .arg(dir.join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("unknown preset"), "stderr: {msg}");
}

#[test]
fn missing_model_file_is_a_runtime_error_naming_the_path() {
    let dir = tmp_dir("missing_model");
    let obs = dir.join("obs.csv");
    std::fs::write(&obs, "index,value\n3,0.5\n").unwrap();
    let out = bin()
        .args(["infer", "--preset", "gp1d-rbf", "--kind", "priorcvae", "--data"])
        .arg(&obs)
        .arg("--model")
        .arg(dir.join("no_such_model.json"))
        .arg("--out")
        .arg(dir.join("run"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("no_such_model.json"), "stderr: {msg}");
}

#[test]
fn sir_round_trip_produces_consistent_artifacts() {
    let dir = tmp_dir("sir_round_trip");
    let train = dir.join("train.csv");
    let obs = dir.join("obs.csv");
    let model = dir.join("model.json");
    let run = dir.join("run");

    ok(&bin()
        .args(["generate", "--preset", "sir", "--count", "4000", "--seed", "3", "--out"])
        .arg(&train)
        .output()
        .unwrap());
    let ds = priorcvae_core::PriorDataset::read_csv(&train).unwrap();
    assert_eq!(ds.rows(), 4000);
    assert_eq!(ds.k(), 2);
    assert_eq!(ds.n(), 14);

    ok(&bin()
        .args(["generate", "--preset", "sir", "--observations", "--out"])
        .arg(&obs)
        .output()
        .unwrap());
    let series = priorcvae_core::dynamics::read_observation_csv(&obs).unwrap();
    assert_eq!(series.len(), 14);

    ok(&bin()
        .args(["train", "--preset", "sir", "--epochs", "60", "--seed", "3", "--dataset"])
        .arg(&train)
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap());
    let loaded = priorcvae_core::CvaeModel::load(&model).unwrap();
    assert_eq!(loaded.condition_dim(), 2);
    assert_eq!(loaded.n(), 14);
    let loss = std::fs::read_to_string(dir.join("model.loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,train_loss,heldout_loss\n"));

    ok(&bin()
        .args([
            "infer", "--preset", "sir", "--kind", "sircvae", "--warmup", "100", "--samples",
            "200", "--chains", "1", "--leapfrog", "8", "--seed", "3", "--data",
        ])
        .arg(&obs)
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap());
    let summary = priorcvae_core::mcmc::read_summary_csv(&run.join("summary.csv")).unwrap();
    assert!(summary.iter().any(|s| s.name == "beta"));
    let meta = priorcvae_core::mcmc::read_run_metadata(&run.join("run.json")).unwrap();
    assert!(meta.wall_secs > 0.0);
    assert!(run.join("chain_0.csv").exists());
    assert!(run.join("config.json").exists());

    let report = dir.join("report.csv");
    ok(&bin()
        .args(["compare", "--runs"])
        .arg(&run)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("model,time_s,ess,ess_per_s\n"));
    assert!(text.contains("beta,"));
}

#[test]
fn gp1d_round_trip_with_decode_and_frobenius_block() {
    let dir = tmp_dir("gp1d_round_trip");
    let train = dir.join("train.csv");
    let obs = dir.join("obs.csv");
    let model = dir.join("model.json");
    let baseline = dir.join("baseline.json");

    ok(&bin()
        .args(["generate", "--preset", "gp1d-matern52", "--count", "3000", "--seed", "5", "--out"])
        .arg(&train)
        .output()
        .unwrap());
    ok(&bin()
        .args(["generate", "--preset", "gp1d-matern52", "--observations", "--seed", "5", "--out"])
        .arg(&obs)
        .output()
        .unwrap());

    for (args, path) in [(vec!["--epochs", "30"], &model), (vec!["--epochs", "30", "--priorvae"], &baseline)] {
        let mut cmd = bin();
        cmd.args(["train", "--preset", "gp1d-matern52", "--seed", "5", "--dataset"])
            .arg(&train)
            .arg("--out")
            .arg(path);
        cmd.args(&args);
        ok(&cmd.output().unwrap());
    }

    let cvae_run = dir.join("run_cvae");
    ok(&bin()
        .args([
            "infer", "--preset", "gp1d-matern52", "--kind", "priorcvae", "--warmup", "150",
            "--samples", "300", "--chains", "1", "--seed", "5", "--data",
        ])
        .arg(&obs)
        .arg("--model")
        .arg(&model)
        .arg("--out")
        .arg(&cvae_run)
        .output()
        .unwrap());
    let gp_run = dir.join("run_gp");
    ok(&bin()
        .args([
            "infer", "--preset", "gp1d-matern52", "--kind", "gp-exact", "--warmup", "60",
            "--samples", "120", "--chains", "1", "--leapfrog", "8", "--seed", "5", "--data",
        ])
        .arg(&obs)
        .arg("--out")
        .arg(&gp_run)
        .output()
        .unwrap());

    // decoded draws at two conditions, one file each, with an SVG
    let decoded = dir.join("decoded.csv");
    let svg = dir.join("decoded.svg");
    ok(&bin()
        .args([
            "decode", "--condition", "0.1", "--condition", "0.9", "--count", "400", "--seed",
            "5", "--model",
        ])
        .arg(&model)
        .arg("--out")
        .arg(&decoded)
        .arg("--svg")
        .arg(&svg)
        .output()
        .unwrap());
    let low = priorcvae_core::PriorDataset::read_csv(&dir.join("decoded-0.csv")).unwrap();
    assert_eq!(low.rows(), 400);
    assert_eq!(low.conditions()[[0, 0]], 0.1);
    assert!(dir.join("decoded-0.svg").exists());

    let vae_decoded = dir.join("vae_decoded.csv");
    ok(&bin()
        .args(["decode", "--count", "400", "--seed", "5", "--model"])
        .arg(&baseline)
        .arg("--out")
        .arg(&vae_decoded)
        .output()
        .unwrap());

    let report = dir.join("report.csv");
    ok(&bin()
        .args(["compare", "--kernel", "matern52", "--grid-n", "80", "--runs"])
        .arg(&cvae_run)
        .arg("--runs")
        .arg(&gp_run)
        .arg("--decoded")
        .arg(format!("priorcvae={}", dir.join("decoded-0.csv").display()))
        .arg("--decoded")
        .arg(format!("priorcvae={}", dir.join("decoded-1.csv").display()))
        .arg("--decoded")
        .arg(format!("priorvae={}", vae_decoded.display()))
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("model,time_s,ess,ess_per_s\n"));
    assert!(text.contains("lengthscale,F_priorvae,F_priorcvae\n"));
    // per-parameter block includes NA cells where parameter sets differ
    assert!(text.contains(",NA"), "report:\n{text}");

    // decode with empty count keeps a valid header
    let empty = dir.join("empty.csv");
    ok(&bin()
        .args(["decode", "--condition", "0.5", "--count", "0", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(&empty)
        .output()
        .unwrap());
    let ds = priorcvae_core::PriorDataset::read_csv(&empty).unwrap();
    assert_eq!(ds.rows(), 0);

    // arity mismatch is a usage error
    let out = bin()
        .args(["decode", "--condition", "0.5,0.9", "--count", "5", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(dir.join("bad.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn seeded_decode_is_reproducible() {
    let dir = tmp_dir("decode_repro");
    let train = dir.join("train.csv");
    let model = dir.join("model.json");
    ok(&bin()
        .args(["generate", "--preset", "sir", "--count", "1500", "--seed", "9", "--out"])
        .arg(&train)
        .output()
        .unwrap());
    ok(&bin()
        .args(["train", "--preset", "sir", "--epochs", "20", "--seed", "9", "--dataset"])
        .arg(&train)
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap());
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        ok(&bin()
            .args(["decode", "--condition", "2.0,0.5", "--count", "50", "--seed", "11", "--model"])
            .arg(&model)
            .arg("--out")
            .arg(path)
            .output()
            .unwrap());
    }
    assert_eq!(
        std::fs::read_to_string(&a).unwrap(),
        std::fs::read_to_string(&b).unwrap()
    );
}

#[test]
fn config_file_overrides_apply_and_echo() {
    let dir = tmp_dir("config_echo");
    let cfg = dir.join("overrides.json");
    std::fs::write(&cfg, r#"{ "epochs": 5, "batch_size": 128 }"#).unwrap();
    let train = dir.join("train.csv");
    ok(&bin()
        .args(["generate", "--preset", "sir", "--count", "1000", "--seed", "2", "--out"])
        .arg(&train)
        .output()
        .unwrap());
    let model = dir.join("model.json");
    ok(&bin()
        .args(["train", "--preset", "sir", "--seed", "2", "--config"])
        .arg(&cfg)
        .arg("--dataset")
        .arg(&train)
        .arg("--out")
        .arg(&model)
        .output()
        .unwrap());
    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.config.json")).unwrap())
            .unwrap();
    assert_eq!(echoed["train"]["epochs"], 5);
    assert_eq!(echoed["train"]["batch_size"], 128);
}

