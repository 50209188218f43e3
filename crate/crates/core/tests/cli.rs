use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqc"))
        .args(args)
        .output()
        .expect("sqc should start")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn presets_verify_cleanly() {
    for preset in ["rotation2d", "exponential2x2"] {
        let out = sqc(&["verify", preset]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        assert!(!stdout(&out).contains("FAIL"));
    }
}

#[test]
fn bad_column_fails_and_is_named() {
    let out = sqc(&["verify", &data("corrupted_column.json")]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL column_sums"), "{text}");
    assert!(text.contains("column 1 sums to 0.8999"), "{text}");
}

#[test]
fn scenario_files_verify() {
    for f in ["rotation_measurement.json", "division.json", "swap_pair.json", "sigma_x_at_start.json"] {
        let out = sqc(&["verify", &data(f)]);
        assert_eq!(out.status.code(), Some(0), "{f}: {}", stdout(&out));
    }
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(sqc(&[]).status.code(), Some(2));
    assert_eq!(sqc(&["verify", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(sqc(&["frobnicate"]).status.code(), Some(2));

    let dir = scratch("parse_errors");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "system": {"kind": "rotation2d"}, "extra": 1}"#).unwrap();
    let out = sqc(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&bad, r#"{"schema_version": 2, "system": {"kind": "rotation2d"}}"#).unwrap();
    assert_eq!(sqc(&["simulate", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_is_byte_reproducible() {
    let a = sqc(&["simulate", &data("rotation_measurement.json")]);
    let b = sqc(&["simulate", &data("rotation_measurement.json")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = sqc(&["--seed", "8", "simulate", &data("rotation_measurement.json")]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_writes_one_file_per_query() {
    let dir = scratch("simulate_out");
    let out = sqc(&["--out", dir.to_str().unwrap(), "simulate", &data("rotation_measurement.json")]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["query0_device_probs.csv", "query1_probabilities.csv", "query2_probabilities.csv"]
    );
    let exact = std::fs::read_to_string(dir.join("query1_probabilities.csv")).unwrap();
    let counts = std::fs::read_to_string(dir.join("query2_probabilities.csv")).unwrap();
    let p: Vec<f64> = exact.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let k: Vec<f64> = counts.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let draws = 100_000.0;
    for (p, k) in p.iter().zip(&k) {
        let sigma = (draws * p * (1.0 - p)).sqrt();
        assert!((k - draws * p).abs() <= 3.0 * sigma, "{k} vs {}", draws * p);
    }
    for line in exact.lines().chain(counts.lines()) {
        assert!(!line.ends_with('\r'));
    }
}

#[test]
fn measure_sigma_x_on_first_configuration() {
    let out = sqc(&["measure", &data("sigma_x_at_start.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let probs: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 2);
    for p in probs {
        assert!((p - 0.5).abs() < 1e-12, "{text}");
    }
}

#[test]
fn dilate_fixture_round_trips() {
    let out = sqc(&["dilate", &data("amplitude_damping.txt")]);
    assert_eq!(out.status.code(), Some(0));
    let report = String::from_utf8(out.stderr.clone()).unwrap();
    assert!(report.contains("unitarity residual="), "{report}");
    let matrices = stochastic_quantum::linalg::parse_matrices(&stdout(&out)).unwrap();
    assert_eq!(matrices.len(), 1);
    assert_eq!(matrices[0].shape(), (8, 8));
    assert!(stochastic_quantum::linalg::is_unitary(&matrices[0], 1e-12));

    let dir = scratch("dilate_out");
    let out = sqc(&["--out", dir.to_str().unwrap(), "dilate", &data("amplitude_damping.txt")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("dilation.txt").exists() && dir.join("dilation_report.txt").exists());

    let bad = dir.join("two_by_three.txt");
    std::fs::write(&bad, "2 2\n1 0\n0 1\n2 2\n1 0\n").unwrap();
    assert_eq!(sqc(&["dilate", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn interfere_profile_peaks_midway() {
    let out = sqc(&["interfere", "rotation2d", "--t", "1.5707963267948966", "--grid", "0,0.7853981633974483"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert!(values[0].abs() < 1e-12);
    assert!((values[1] - 0.5).abs() < 1e-12);
}
