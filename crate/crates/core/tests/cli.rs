use std::path::Path;
use std::process::{Command, Output};

fn w2lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_w2lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn sample_w2_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = w2lab(
        dir.path(),
        &["sample", "--process", "poisson", "--intensity", "100", "--domain", "unit-square", "--seed", "7"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    assert!(csv.starts_with("x1,x2\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sample.json")).unwrap()).unwrap();
    assert_eq!(meta["process"], "poisson");
    assert_eq!(meta["seed"], 7);

    let out = w2lab(dir.path(), &["w2", "--points", "sample.csv", "--ref", "uniform-square", "--resolution", "64"]);
    assert!(out.status.success());
    let v = json(&out);
    let (cost, qb) = (v["cost"].as_f64().unwrap(), v["quantization_bound"].as_f64().unwrap());
    assert!(cost > 0.0 && qb > 0.0);

    let out = w2lab(dir.path(), &["bound", "--points", "sample.csv", "--ref", "uniform-square"]);
    assert!(out.status.success());
    let b = json(&out);
    assert!(b["bound"].as_f64().unwrap() + qb >= cost);
    for key in ["t", "series", "tail", "C1", "c", "bound", "lambda_max"] {
        assert!(b.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn experiment_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
        process = "gaf"
        params = [40.0, 80.0, 160.0, 320.0]
        domain = "unit-square"
        trials = 8
        seed = 5
        output = "records.csv"
        [transport]
        resolution = 32
        [smoothing]
        t_lo = 0.0001
        t_hi = 1.0
    "#;
    std::fs::write(dir.path().join("cfg.toml"), cfg).unwrap();
    let out = w2lab(dir.path(), &["experiment", "--config", "cfg.toml", "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("records.csv")).unwrap();
    assert!(dir.path().join("records.json").exists());
    let out = w2lab(dir.path(), &["experiment", "--config", "cfg.toml", "--no-timing"]);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(dir.path().join("records.csv")).unwrap());

    let out = w2lab(dir.path(), &["fit", "--in", "records.csv", "--model", "sqrt-log"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = json(&out);
    assert_eq!(fit["log_corrected"], true);
    assert_eq!(fit["n_params"], 4);
    assert!(fit["gamma"].as_f64().unwrap() < 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = w2lab(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let out = w2lab(dir.path(), &["sample", "--process", "poisson", "--intensity", "10", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = w2lab(dir.path(), &["w2", "--points", "missing.csv", "--ref", "uniform-square"]);
    assert_eq!(out.status.code(), Some(1));

    let out = w2lab(
        dir.path(),
        &["sample", "--process", "bessel", "--param", "1e9", "--domain", "unit-square"],
    );
    assert_eq!(out.status.code(), Some(2));

    let out = w2lab(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
