//! End-to-end checks of the command-line surface: exit codes, environment
//! override, and artifact layout.

use std::path::Path;
use std::process::Command;

fn blackstart() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blackstart"))
}

#[test]
fn synth_data_is_deterministic_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let status = blackstart()
            .args(["synth-data", "--seed", "11", "--days", "31", "--profile", "res_low"])
            .arg("--out")
            .arg(dir.path().join(name))
            .status()
            .expect("spawn");
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"seed\": 1}").unwrap();
    let output = blackstart()
        .args(["run", "--config"])
        .arg(&bad)
        .output()
        .expect("spawn");
    assert_eq!(output.status.code(), Some(2), "{output:?}");

    let output = blackstart()
        .args(["synth-data", "--profile", "nonexistent", "--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .expect("spawn");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn stage_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    // A series too short for the requested window fails inside training.
    let csv = dir.path().join("short.csv");
    let mut text =
        String::from("timestamp,load_kw,temp_c,humidity_pct,wind_speed_mps,wind_dir_deg\n");
    for h in 0..10 {
        text.push_str(&format!("2024-06-01T0{h}:00:00Z,50,20,60,4,180\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let output = blackstart()
        .args(["train", "--window", "72", "--data"])
        .arg(&csv)
        .arg("--out")
        .arg(dir.path().join("model.json"))
        .output()
        .expect("spawn");
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn bundled_demo_config_parses_and_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_config.json");
    let loaded = blackstart::experiment::ExperimentConfig::load(&path).expect("demo config");
    let defaults = blackstart::experiment::ExperimentConfig::default();
    assert_eq!(loaded.content_hash(), defaults.content_hash());
}

#[test]
fn bundled_feeder_file_round_trips_through_the_loader() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/ieee123.json");
    let feeder = blackstart::feeder::load_feeder(&path).expect("bundled feeder");
    assert_eq!(feeder.buses.len(), 123);
    assert_eq!(feeder.gfm_buses(), vec!["13", "19", "60", "76"]);
    assert_eq!(feeder.loads.iter().filter(|l| l.attacked).count(), 7);
}

#[test]
fn tiny_pipeline_run_writes_artifacts_and_honors_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let feeder_path = dir.path().join("two_bus.json");
    blackstart::feeder::save_feeder(&feeder_path, &blackstart::feeder::builtin::two_bus())
        .expect("feeder export");

    let config = serde_json::json!({
        "seed": 3,
        "days": 30,
        "window_hours": 24,
        "model": {"architecture": {"recurrent": {"hidden": 5}}, "learning_rate": 0.05, "epochs": 40},
        "attacks": [{"method": "saa", "sparsity": 8}],
        "attack_params": {"epsilon": 0.05, "step_size": 0.005, "iterations": 15,
                            "fd_delta": 0.001, "mode": "white_box"},
        "plan_attack": 0,
        "feeder": feeder_path,
        "stages": 2,
        "stage_minutes": 60.0,
        "start_hour": 8,
        "clpu_enabled": true,
        "test_windows": 4,
        "output_dir": dir.path().join("ignored")
    });
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out_dir = dir.path().join("redirected");
    let output = blackstart()
        .args(["run", "--config"])
        .arg(&config_path)
        .env("BLACKSTART_OUT", &out_dir)
        .output()
        .expect("spawn");
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    for artifact in [
        "report.json",
        "attack_table.csv",
        "plans/attacked.json",
        "validation/report.json",
        "config.json",
    ] {
        assert!(out_dir.join(artifact).exists(), "missing {artifact}");
    }
    assert!(!dir.path().join("ignored").exists(), "env override not honored");

    // Rebuilding the report from artifacts reproduces the attack table.
    let before: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let status = blackstart()
        .args(["report", "--run-dir"])
        .arg(&out_dir)
        .status()
        .expect("spawn");
    assert!(status.success());
    let after: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(before["attack_table"], after["attack_table"]);
    assert_eq!(before["stability"], after["stability"]);
}
