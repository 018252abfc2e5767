//! End-to-end checks of the binary: exit codes, output schemas, config
//! handling, and CSV round-trip stability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_cvanneal")
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str], output_dir: &Path) -> Output {
    Command::new(binary())
        .args(args)
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--output-dir")
        .arg(output_dir)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .collect();
    (header, rows)
}

#[test]
fn sweep_schema_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--t-grid", "1,10", "--chi-grid", "0,0.5", "--truncation", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(
        header,
        vec![
            "T",
            "chi",
            "d",
            "quadratures",
            "problem_energy",
            "ground_energy_exact",
            "theta_star",
            "norm_drift",
            "status"
        ]
    );
    assert_eq!(rows.len(), 4);
    // Sorted by (chi, T).
    let order: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[0].parse().unwrap()))
        .collect();
    assert_eq!(order, vec![(0.0, 1.0), (0.0, 10.0), (0.5, 1.0), (0.5, 10.0)]);
    assert!(rows.iter().all(|r| r[8] == "ok"));
    assert!(rows.iter().all(|r| r[2] == "8"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["dataset"], "iris");
    assert_eq!(summary["config"]["truncation"], 8);
    assert_eq!(summary["dataset"]["rows_used"], 50);
    assert_eq!(summary["rows"], 4);
    assert!(summary["theta_star"][0].as_f64().unwrap() > 0.7);
    assert!(summary["wall_time_seconds"].as_f64().is_some());
}

#[test]
fn sweep_round_trips_through_a_csv_reader() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--t-grid", "5", "--truncation", "8"], dir.path());
    assert!(out.status.success());
    let path = dir.path().join("sweep.csv");

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&path)
        .unwrap();
    let record = reader.records().next().unwrap().unwrap();
    let t: f64 = record[0].parse().unwrap();
    let quadratures: Vec<f64> =
        record[3].split(';').map(|v| v.parse().unwrap()).collect();
    assert_eq!(t, 5.0);
    assert_eq!(quadratures.len(), 1);

    // Re-emitting the parsed floats reproduces the exact cell text.
    assert_eq!(format!("{:?}", quadratures[0]), &record[3]);
}

#[test]
fn overlay_schema_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["overlay", "--dataset", "penguins", "--model", "m3", "--time", "20", "--truncation", "6"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("overlay.csv"));
    assert_eq!(
        header,
        vec![
            "body_mass_g",
            "bill_depth_mm",
            "flipper_length_mm",
            "prediction_annealed",
            "prediction_classical"
        ]
    );
    assert_eq!(rows.len(), 342);
}

#[test]
fn catalyst_needs_a_zero_chi_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["catalyst", "--chi-grid", "0.1,0.5", "--t-grid", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["catalyst", "--chi-grid", "0,0.5", "--t-grid", "1,2", "--truncation", "8"], dir.path());
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("catalyst.csv"));
    assert_eq!(header[5], "energy_gap");
    assert_eq!(header[6], "beats_zero_chi");
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let gap: f64 = row[5].parse().unwrap();
        assert!(gap >= -1e-9);
        let chi: f64 = row[1].parse().unwrap();
        if chi == 0.0 {
            assert_eq!(row[6], "false");
        } else {
            assert!(row[6] == "true" || row[6] == "false");
        }
    }
}

#[test]
fn qubo_header_records_precision_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["qubo", "--k-max", "3", "--truncation", "8"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("qubo.csv")).unwrap();
    assert!(text.contains("# precision family k=1: [2.0]"));
    assert!(text.contains("# precision family k=3: [2.0;1.0;0.5]"));
    let (header, rows) = read_csv(&dir.path().join("qubo.csv"));
    assert_eq!(header, vec!["k", "theta", "objective", "gap_vs_continuous"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[3][0], "continuous");

    let k1_gap: f64 = rows[0][3].parse().unwrap();
    let continuous_gap: f64 = rows[3][3].parse().unwrap();
    assert!(k1_gap >= continuous_gap);
}

#[test]
fn explicit_precision_vector_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["qubo", "--precision", "1,0.5,0.25", "--truncation", "8"], dir.path());
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("qubo.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "3");

    let out = run(&["qubo", "--precision", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
dataset = "synthetic"
model = "m2"
t_grid = [2.0]
truncation = 8
seed = 11
"#,
    )
    .unwrap();
    let out = Command::new(binary())
        .args(["sweep", "--config"])
        .arg(&config_path)
        .args(["--seed", "12"])
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["seed"], 12);
    assert_eq!(summary["config"]["model"], "m2");
    assert_eq!(summary["dataset"]["name"], "synthetic(seed=12)");
}

#[test]
fn exit_codes_for_config_and_instability() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown dataset: config error.
    let out = run(&["sweep", "--dataset", "nonexistent"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // Unknown config key: schema error.
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "tgrid = [1.0]\n").unwrap();
    let out = Command::new(binary())
        .args(["sweep", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing data file: dataset error.
    let out = Command::new(binary())
        .args(["lsq", "--data-dir", "/nonexistent"])
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // A single-point command hitting the instability bound aborts with 2.
    let out = run(
        &["overlay", "--time", "10", "--time-step", "1.0", "--truncation", "24"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm drift"));
}

#[test]
fn unstable_sweep_rows_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["sweep", "--t-grid", "1,10", "--time-step", "0.9", "--truncation", "24"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r[8] == "unstable"), "expected an unstable row");
    for row in rows.iter().filter(|r| r[8] == "unstable") {
        assert!(row[3].is_empty());
        let drift: f64 = row[7].parse().unwrap();
        assert!(drift >= 1e-6);
    }
}

#[test]
fn workers_env_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(binary())
        .args(["sweep", "--t-grid", "1", "--truncation", "4"])
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--output-dir")
        .arg(dir.path())
        .env("CVANNEAL_WORKERS", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = Command::new(binary())
        .args(["sweep", "--t-grid", "1", "--truncation", "4"])
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--output-dir")
        .arg(dir.path())
        .env("CVANNEAL_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn auto_truncation_records_chosen_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--t-grid", "20", "--truncation", "auto"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][8], "ok");
    let chosen: usize = rows[0][2].parse().unwrap();
    assert!((4..=16).contains(&chosen));
}
