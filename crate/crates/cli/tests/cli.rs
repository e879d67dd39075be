use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rbcplan(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbcplan"))
        .current_dir(cwd)
        .env_remove("RBCPLAN_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(cwd: &Path, args: &[&str]) -> String {
    let out = rbcplan(cwd, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "stderr: {stderr}");
    serde_json::from_str(stderr.trim()).expect("stderr is one JSON object")
}

/// generate -> train -> compare in `dir`, with short series to keep it quick.
fn pipeline(dir: &Path) -> String {
    ok(dir, &["--run-dir", "gen", "generate", "--days", "900", "--seed", "7"]);
    ok(dir, &["--run-dir", "train", "train", "--input", "gen/dataset.csv", "--test-days", "120", "--n-rounds", "40"]);
    ok(dir, &["--run-dir", "cmp", "compare", "--model", "train/model.json", "--input", "gen/dataset.csv"])
}

#[test]
fn pipeline_prints_four_strategies() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = pipeline(tmp.path());
    let header = stdout.lines().find(|l| l.starts_with("summary")).expect("table header");
    for label in ["baseline", "gold", "daily", "semiweekly"] {
        assert!(header.contains(label), "{header}");
    }
    assert!(stdout.trim_end().ends_with("run_dir=cmp"));
    let csv = fs::read_to_string(tmp.path().join("cmp/comparison.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "metric,baseline,gold,daily,semiweekly");
    for f in ["policy.json", "forecast.csv", "comparison.txt", "trajectory_semiweekly.csv", "manifest.json"] {
        assert!(tmp.path().join("cmp").join(f).exists(), "{f}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    for f in [
        "gen/dataset.csv",
        "gen/truth.csv",
        "train/model.json",
        "train/importance.csv",
        "train/metrics.json",
        "cmp/comparison.csv",
        "cmp/forecast.csv",
        "cmp/policy.json",
        "cmp/trajectory_daily.csv",
    ] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_records_inputs_outputs_and_status() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["--out-root", "runs", "generate", "--days", "60"]);
    let runs: Vec<_> = fs::read_dir(tmp.path().join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1);
    assert!(runs[0].file_name().unwrap().to_string_lossy().starts_with("generate-"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(runs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["generate"]["n_days"], 60);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["dataset.csv", "truth.csv"]);
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);

    // a second run never reuses the directory
    ok(tmp.path(), &["--out-root", "runs", "generate", "--days", "60"]);
    assert_eq!(fs::read_dir(tmp.path().join("runs")).unwrap().count(), 2);
}

#[test]
fn zero_horizon_forecast_is_an_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--run-dir", "gen", "generate", "--days", "200"]);
    ok(d, &["--run-dir", "train", "train", "--input", "gen/dataset.csv", "--test-days", "30", "--n-rounds", "10"]);
    ok(d, &["--run-dir", "fc", "forecast", "--model", "train/model.json", "--input", "gen/dataset.csv", "--horizon", "0"]);
    assert_eq!(fs::read_to_string(d.join("fc/forecast.csv")).unwrap().trim(), "date,actual,predicted");

    ok(d, &["--run-dir", "fc7", "forecast", "--model", "train/model.json", "--input", "gen/dataset.csv", "--horizon", "7"]);
    assert_eq!(fs::read_to_string(d.join("fc7/forecast.csv")).unwrap().lines().count(), 8);

    let out = rbcplan(d, &["--run-dir", "big", "forecast", "--model", "train/model.json", "--input", "gen/dataset.csv", "--horizon", "31"]);
    assert!(error_line(&out)["message"].as_str().unwrap().contains("horizon 31"));
}

#[test]
fn mismatched_streams_name_both_lengths() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("orders.csv"), "order\n10\n0\n5\n").unwrap();
    fs::write(d.join("demands.csv"), "demand\n4\n4\n").unwrap();
    let out = rbcplan(d, &["--run-dir", "sim", "simulate", "--orders", "orders.csv", "--demands", "demands.csv"]);
    let e = error_line(&out);
    assert_eq!(e["status"], "error");
    assert_eq!(e["kind"], "length_mismatch");
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains('3') && msg.contains('2'), "{msg}");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("sim/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "failed");
}

#[test]
fn simulate_writes_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("orders.csv"), "order\n100\n100\n").unwrap();
    fs::write(d.join("demands.csv"), "demand\n100\n100\n").unwrap();
    ok(d, &["--run-dir", "sim", "simulate", "--orders", "orders.csv", "--demands", "demands.csv"]);
    let traj = fs::read_to_string(d.join("sim/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 3);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("sim/summary.json")).unwrap()).unwrap();
    // opening stock of 780 is held constant at cost 100 + 780 per day
    assert_eq!(s["cost"]["mean"], 880.0);
}

#[test]
fn config_file_overrides_defaults_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.toml"), "[generate]\nn_days = 50\nseed = 3\n").unwrap();
    ok(d, &["--config", "cfg.toml", "--run-dir", "a", "generate"]);
    assert_eq!(fs::read_to_string(d.join("a/dataset.csv")).unwrap().lines().count(), 51);
    ok(d, &["--config", "cfg.toml", "--run-dir", "b", "generate", "--days", "20"]);
    assert_eq!(fs::read_to_string(d.join("b/dataset.csv")).unwrap().lines().count(), 21);

    fs::write(d.join("bad.toml"), "[generate]\nn_dayz = 50\n").unwrap();
    let e = error_line(&rbcplan(d, &["--config", "bad.toml", "--run-dir", "c", "generate"]));
    assert_eq!(e["kind"], "config");
}

#[test]
fn usage_errors_are_json_and_help_is_not() {
    let tmp = tempfile::tempdir().unwrap();
    let e = error_line(&rbcplan(tmp.path(), &["train"]));
    assert_eq!(e["kind"], "usage");
    let help = rbcplan(tmp.path(), &["--help"]);
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("compare"));
}

#[test]
fn optimize_then_compare_reuses_the_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--run-dir", "gen", "generate", "--days", "500"]);
    ok(d, &["--run-dir", "train", "train", "--input", "gen/dataset.csv", "--test-days", "60", "--n-rounds", "20"]);
    ok(d, &["--run-dir", "opt", "optimize", "--model", "train/model.json", "--input", "gen/dataset.csv"]);
    ok(d, &["--run-dir", "cmp", "compare", "--model", "train/model.json", "--input", "gen/dataset.csv", "--policy", "opt/policy.json"]);
    assert_eq!(fs::read(d.join("opt/policy.json")).unwrap(), fs::read(d.join("cmp/policy.json")).unwrap());
    let sweep = fs::read_to_string(d.join("opt/sweep_target.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "target,average_cost,objective,selected");
    assert_eq!(sweep.lines().filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn train_with_selection_and_grid_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("cfg.toml"), "[train.grid]\nn_rounds = [10, 20]\n").unwrap();
    ok(d, &["--run-dir", "gen", "generate", "--days", "400"]);
    ok(d, &["--config", "cfg.toml", "--run-dir", "t", "train", "--input", "gen/dataset.csv", "--test-days", "50", "--select", "--cv-folds", "3"]);
    assert_eq!(fs::read_to_string(d.join("t/cv.csv")).unwrap().lines().count(), 3);
    assert!(fs::read_to_string(d.join("t/selection.csv")).unwrap().lines().count() >= 2);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("t/metrics.json")).unwrap()).unwrap();
    assert!(m["test"]["rmse"].as_f64().unwrap() > 0.0);
}
