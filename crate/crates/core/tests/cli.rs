use std::process::{Command, Output};

use serde_json::Value;

fn condcw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condcw"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = condcw(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let args = [
            "sweep-h",
            "--beta",
            "3",
            "--s",
            "0.2",
            "--r",
            "0.2",
            "--h-min",
            "-0.5",
            "--h-max",
            "0.5",
            "--points",
            "101",
            "--out",
            path.to_str().unwrap(),
        ];
        assert!(condcw(&args).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mc = [
        "mc", "--beta", "2", "--s", "0.3", "--r", "0.2", "--h", "0.05", "--n", "400", "--sweeps",
        "500", "--seed", "11",
    ];
    let first = stdout(&mc);
    assert_eq!(first, stdout(&mc));
    let header = first.lines().next().unwrap();
    assert!(
        header.starts_with("# condcw ")
            && header.contains("rng=ChaCha8")
            && header.contains("seed=11")
    );
}

#[test]
fn exit_codes() {
    let bad_fraction = condcw(&["limits", "--beta", "2", "--s", "0.7", "--r", "0.4"]);
    assert_eq!(bad_fraction.status.code(), Some(2));
    let missing = condcw(&["solve", "--beta", "2", "--s", "0.1"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_range = condcw(&[
        "sweep-h", "--beta", "2", "--s", "0.1", "--r", "0.1", "--h-min", "1", "--h-max", "0",
        "--points", "5",
    ]);
    assert_eq!(bad_range.status.code(), Some(2));
    let no_config = condcw(&["limits", "--config", "/nonexistent/condcw.json"]);
    assert_eq!(no_config.status.code(), Some(1));
    assert!(
        condcw(&["limits", "--beta", "2", "--s", "0.2", "--r", "0.1"])
            .status
            .success()
    );
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"beta": 1.5, "s": 0.3, "r": 0.3, "format": "json"}"#,
    )
    .unwrap();
    let v: Value =
        serde_json::from_str(&stdout(&["limits", "--config", cfg.to_str().unwrap()])).unwrap();
    assert_eq!(v["rows"][0]["regime"], "NoJump");
    let v: Value = serde_json::from_str(&stdout(&[
        "limits",
        "--config",
        cfg.to_str().unwrap(),
        "--beta",
        "4",
    ]))
    .unwrap();
    assert_eq!(v["rows"][0]["regime"], "SymmetricFlip");
    assert_eq!(v["meta"]["beta"], 4.0);
}

#[test]
fn diagram_is_row_major_and_flags_invalid_cells() {
    let out = stdout(&["diagram", "--points", "4", "--beta-factor", "2"]);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 16);
    let keys: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    // (0.5, 0.5) and (0.75, 0.25) sit on s + r = 1
    let invalid = rows.iter().filter(|r| r[4] == "invalid").count();
    assert_eq!(invalid, 6);
    for row in rows.iter().filter(|r| r[4] != "invalid" && r[0] != r[1]) {
        assert_ne!(row[5], "NoJump");
    }
}

#[test]
fn sweep_h_is_sorted() {
    let out = stdout(&[
        "sweep-h",
        "--beta",
        "2",
        "--s",
        "0.2",
        "--r",
        "0.1",
        "--h-min=-0.6",
        "--h-max",
        "0.4",
        "--points",
        "37",
    ]);
    let hs: Vec<f64> = out
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(hs.len(), 38);
    assert!(hs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn compare_reports() {
    let v: Value = serde_json::from_str(&stdout(&[
        "compare",
        "--beta",
        "2",
        "--s",
        "0.3",
        "--r",
        "0.2",
        "--h",
        "0.05",
        "--n",
        "500,1000,2000,4000,8000,16000,32000,64000",
    ]))
    .unwrap();
    assert_eq!(v["checks"]["error_nonincreasing"], true);
    assert_eq!(v["checks"]["final_error_below_tolerance"], true);
    assert_eq!(v["exact"].as_array().unwrap().len(), 8);

    let v: Value = serde_json::from_str(&stdout(&[
        "compare", "--beta", "0.5", "--s", "0", "--r", "0", "--h", "0", "--n", "100,1000",
        "--sweeps", "1000",
    ]))
    .unwrap();
    assert_eq!(v["m_inf"], 0.0);
    assert_eq!(v["exact"][1]["mean_magnetization"], 0.0);
    assert_eq!(v["checks"]["mc_within_3_sigma"], true);

    let v: Value = serde_json::from_str(&stdout(&[
        "compare",
        "--beta",
        "1.438410",
        "--s",
        "0.2",
        "--r",
        "0.1",
        "--h=-0.101",
        "--n",
        "500,1000,2000",
        "--sweeps",
        "20000",
        "--seed",
        "3",
    ]))
    .unwrap();
    assert!(v["m_inf"].as_f64().unwrap().abs() < 0.05);
    assert_eq!(v["checks"]["mc_within_3_sigma"], true);
    assert!(v["meta"]["rng"].as_str().unwrap().starts_with("ChaCha8"));

    let csv = condcw(&[
        "compare", "--beta", "1", "--s", "0", "--r", "0", "--h", "0", "--n", "10", "--format",
        "csv",
    ]);
    assert_eq!(csv.status.code(), Some(2));
}
