use std::fs;
use std::path::Path;
use std::process::Command;

fn ppm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ppm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        r#"
seed = 3
Z = 1

[tuning]
m_grid = [0.5, 1.0]
K = 3
v = 1

[validation]
B = 20

[simulation]
n = 240
n_features = 8
n_binary = 4
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn simulate_then_tune() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let data = dir.path().join("data.csv");
    let out = ppm(&["simulate", "--config", &cfg, "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = fs::read_to_string(&data).unwrap();
    assert!(header.lines().next().unwrap().split(',').any(|c| c == "y"));
    assert_eq!(header.lines().count(), 241);
    assert!(dir.path().join("data.meta.json").exists());

    let tuning = dir.path().join("tuning.json");
    let out = ppm(&[
        "tune",
        "--config",
        &cfg,
        "--data",
        data.to_str().unwrap(),
        "--out",
        tuning.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&tuning).unwrap()).unwrap();
    let p = json["p_optimal"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert!(dir.path().join("loss_curve.csv").exists());
}

#[test]
fn metrics_on_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    fs::write(&pairs, "y,p\n0,0.2\n1,0.8\n0,0.4\n1,0.6\n").unwrap();
    let out_path = dir.path().join("m.json");
    let out = ppm(&["metrics", "--pairs", pairs.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["n"], 4);
    let cal = json["calibration_term"].as_f64().unwrap();
    let refine = json["refinement_term"].as_f64().unwrap();
    // Brier = (0.04 + 0.04 + 0.16 + 0.16) / 4
    assert!((cal + refine - 0.1).abs() < 1e-12);
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[validation]\nB = \"many\"\n").unwrap();
    let out = ppm(&["experiment", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("validation.B"), "{err}");
}

#[test]
fn missing_pairs_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    fs::write(&pairs, "y,q\n0,0.2\n1,0.8\n").unwrap();
    let out = ppm(&["metrics", "--pairs", pairs.to_str().unwrap(), "--out", "unused.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`p` column"));
}
