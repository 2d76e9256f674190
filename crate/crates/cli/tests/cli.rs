use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gfwp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfwp"))
        .current_dir(dir)
        .env_remove("GFWP_DATA_DIR")
        .env("GFWP_THREADS", "1")
        .args(args)
        .output()
        .expect("spawn gfwp")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gfwp(dir, args);
    assert!(
        out.status.success(),
        "gfwp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: impl AsRef<Path>) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

fn sunspots() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sunspot_monthly_proxy.txt")
}

#[test]
fn gen_writes_expected_series() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "narma5", "--out", "n5.csv"]);
    assert_eq!(data_rows(dir.path().join("n5.csv")).len(), 300);
    ok(dir.path(), &["gen", "shm", "--out", "shm.csv"]);
    let rows = data_rows(dir.path().join("shm.csv"));
    assert_eq!(rows.len(), 1000);
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(first, 3.0);
    assert!(dir.path().join("run_manifest.json").exists());
}

#[test]
fn gen_respects_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gfwp"))
        .env("GFWP_DATA_DIR", dir.path())
        .args(["gen", "bessel", "--points", "50"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(data_rows(dir.path().join("bessel.csv")).len(), 50);
}

#[test]
fn unknown_dataset_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfwp(dir.path(), &["gen", "lorenz"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["shm", "bessel", "narma5", "narma10", "dqc", "jc"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfwp(dir.path(), &["train", "--variant", "lstm", "--data", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gfwp(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_data_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gfwp(dir.path(), &["train", "--variant", "g-fwp", "--data", "absent.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "narma5", "--out", "n5.csv"]);
    ok(
        d,
        &["train", "--variant", "gqkan-qkanfwp", "--data", "n5.csv", "-N", "8", "--epochs", "2", "--seed", "3", "--out", "run"],
    );
    for f in ["checkpoint.json", "loss_curve.csv", "results.csv", "metrics.json", "run_manifest.json"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    assert_eq!(data_rows(d.join("run/loss_curve.csv")).len(), 2);
    let header = std::fs::read_to_string(d.join("run/results.csv")).unwrap();
    assert!(header.starts_with("variant,dataset,N,seed,epoch,split,loss"));
    let manifest = read_json(d.join("run/run_manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["threads"], 1);

    let trained = read_json(d.join("run/metrics.json"));
    ok(d, &["eval", "--checkpoint", "run/checkpoint.json", "--data", "n5.csv", "--export-trajectory"]);
    let evaluated = read_json(d.join("run/eval/metrics.json"));
    assert_eq!(trained["metrics"]["scaled_mse"], evaluated["metrics"]["scaled_mse"]);
    assert_eq!(trained["metrics"]["pae"], evaluated["metrics"]["pae"]);
    assert!(evaluated["metrics"]["relative_mse"].is_null());

    let traj = data_rows(d.join("run/eval/trajectory.csv"));
    assert_eq!(traj.len(), 7);
    let beta = read_json(d.join("run/eval/beta.json"));
    assert_eq!(beta["steps"], 7);

    ok(d, &["eval", "--checkpoint", "run/checkpoint.json", "--data", "n5.csv", "--shots", "256", "--out", "shots"]);
    let m = read_json(d.join("shots/metrics.json"));
    let rel = m["metrics"]["relative_mse"].as_f64().unwrap();
    assert!(rel.is_finite() && rel > 0.0);
    assert_eq!(m["metrics"]["shots"], 256);
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "narma5", "--out", "n5.csv"]);
    std::fs::write(d.join("cfg.toml"), "seed = 5\nwindow = 4\n[train]\nepochs = 1\n[model]\nmlp_hidden = 6\n").unwrap();
    ok(d, &["--config", "cfg.toml", "train", "--variant", "fwp", "--data", "n5.csv", "--out", "run"]);
    let m = read_json(d.join("run/run_manifest.json"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["window"], 4);
    assert_eq!(m["config"]["dims"]["mlp_hidden"], 6);

    std::fs::write(d.join("bad.toml"), "epochs = 1\n").unwrap();
    let out = gfwp(d, &["--config", "bad.toml", "train", "--variant", "fwp", "--data", "n5.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn forecast_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("small.toml"),
        "window = 24\n[train]\nepochs = 1\nbatch_size = 16\n[model]\nmlp_hidden = 4\nslow_latent = 2\nfast_latent = 2\nfast_layers = 1\n",
    )
    .unwrap();
    let silso = sunspots();
    let silso = silso.to_str().unwrap();
    ok(
        d,
        &["--config", "small.toml", "train", "--task", "forecast", "--variant", "gqkan-qkanfwp", "--data", silso, "--out", "run"],
    );
    let ckpt = read_json(d.join("run/checkpoint.json"));
    assert_eq!(ckpt["header"]["horizon"], 132);
    assert_eq!(ckpt["header"]["loss"], "peak-aware");

    ok(d, &["forecast", "--checkpoint", "run/checkpoint.json", "--silso", silso, "--out", "a"]);
    ok(d, &["forecast", "--checkpoint", "run/checkpoint.json", "--silso", silso, "--out", "b"]);
    let a = std::fs::read_to_string(d.join("a/forecast.csv")).unwrap();
    let b = std::fs::read_to_string(d.join("b/forecast.csv")).unwrap();
    assert_eq!(a, b);
    let rows = data_rows(d.join("a/forecast.csv"));
    assert_eq!(rows.len(), 132);
    for r in &rows {
        let v: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v >= 0.0 && v.is_finite());
    }
}

#[test]
fn scan_bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["scan-bench", "--t", "1024,4096", "--p", "1,2", "--reps", "1", "--out", "sb"]);
    assert!(stdout.contains("slope"));
    let rows = data_rows(dir.path().join("sb/scan_bench.csv"));
    assert_eq!(rows.len(), 6);
}

#[test]
fn sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "sweep", "--variants", "fwp,g-fwp", "--datasets", "narma5", "--windows", "4", "--seeds", "2", "--epochs", "1", "--out", "sw",
        ],
    );
    let rows = data_rows(d.join("sw/sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(d.join("sw/results.csv").exists());
}
