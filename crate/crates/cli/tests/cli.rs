use std::process::Command;

fn hprec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hprec"))
}

const SMALL: &str = r#"
architectures = ["fc-ups"]
snr_grid_db = [0.0]
n_trials = 3
master_seed = 5

[system]
n_tx = 16
n_rx = 4
n_users = 2
n_streams = 1
n_rf_tx = 4

[admm]
max_iters = 10
"#;

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("r.csv");
    let status = hprec()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "11", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "arch,l_max,element,snr_db,trials,mean_se,std_se,ci95,residual,leakage,power_w"
    );
    assert_eq!(csv.lines().count(), 3);
    let manifest = std::fs::read_to_string(dir.path().join("r.manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["master_seed"], 11);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].is_string());
    assert_eq!(m["config"]["n_trials"], 3);
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("n_rf_tx = 4", "n_rf_tx = 1")).unwrap();
    let out = hprec()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("n_rf_tx"), "{err}");
}

#[test]
fn missing_file_and_zero_threads_fail() {
    let out = hprec()
        .args(["validate", "--config", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = hprec()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .args(["--threads", "0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn power_lists_requested_architectures() {
    let out = hprec()
        .args(["power", "--arch", "fc-ups", "--arch", "fc-si"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "fc-ups\t223.24\nfc-si\t38.92\n");
    let out = hprec()
        .args(["power", "--arch", "fc-bogus"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
