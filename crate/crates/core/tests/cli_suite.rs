use std::process::Command;

use dupkit::cli::verify::{criterion_1, verify_selected, Expectations};
use dupkit::cli::{emit_config, parse_config, run_experiment, Format};

const LBHR: &str = r#"{
    "profile": [
        {"name": "point_mass", "curve": {"triangle": {"q": 1, "r": 1}}},
        {"name": "equal_revenue", "curve": {"equal_revenue": 1}}
    ],
    "duplicates": {"all_once": {"pair_constrained": false}},
    "verify": [1],
    "sampling": {"n_samples": 20000, "seed": 11}
}"#;

#[test]
fn tampered_expectation_fails_the_right_row() {
    let exp = Expectations { spa_all_duplicates: 1.49, ..Expectations::default() };
    let r = criterion_1(&exp);
    assert!(!r.passed());
    let failed: Vec<_> = r.rows.iter().filter(|r| !r.passed).map(|r| r.label.as_str()).collect();
    assert_eq!(failed, ["spa_all_duplicates"]);
    assert!(criterion_1(&Expectations::default()).passed());
}

#[test]
fn summary_bytes_are_reproducible() {
    let exp = Expectations::default();
    let a = verify_selected(5, &[1, 4, 8], &exp).unwrap();
    let b = verify_selected(5, &[1, 4, 8], &exp).unwrap();
    assert!(a.passed());
    assert_eq!(a.render(), b.render());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn lbhr_experiment_reports_exact_rows() {
    let cfg = parse_config(LBHR).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert!(report.passed);
    assert_eq!(report.exit_code(), 0);
    let json = report.render(Format::Json);
    assert!(json.contains("1.500000000"));
    assert!(json.contains(&format!("{:.9}", 4f64.ln())));
    assert_eq!(report.config_hash, cfg.hash());
    // Re-running the embedded config reproduces the report exactly.
    let again = run_experiment(&parse_config(&emit_config(&report.config)).unwrap()).unwrap();
    assert_eq!(again.render(Format::Json), json);
    assert!(report.render(Format::Csv).lines().count() > 5);
}

#[test]
fn failing_bound_is_reported_not_raised() {
    let text = r#"{
        "profile": [{"curve": {"triangle": {"q": 0.5, "r": 0.5}}}, {"curve": {"triangle": {"q": 0.5, "r": 0.5}}}],
        "mechanism": {"name": "posted", "prices": [50, 50]},
        "constants": {"alpha": 0.27, "beta": 0.4},
        "bounds": ["single"],
        "sampling": {"n_samples": 1000}
    }"#;
    let report = run_experiment(&parse_config(text).unwrap()).unwrap();
    assert!(!report.passed);
    assert_eq!(report.exit_code(), 1);
    assert_eq!(report.failures().count(), 1);
}

fn dupkit(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dupkit")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn binary_exit_codes() {
    let dir = std::env::temp_dir().join(format!("dupkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("lbhr.json");
    std::fs::write(&good, LBHR).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"profile\": [").unwrap();
    let hyp = dir.join("hyp.json");
    std::fs::write(
        &hyp,
        r#"{"profile": [{"curve": {"point_mass": 1}}], "constants": {"alpha": 0.6, "beta": 0.4}, "bounds": ["single"]}"#,
    )
    .unwrap();

    let (code, out) = dupkit(&["simulate", "--config", good.to_str().unwrap(), "--samples", "5000"]);
    assert_eq!(code, 0);
    assert!(out.contains("config_hash"));
    assert_eq!(dupkit(&["simulate", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(dupkit(&["simulate", "--config", hyp.to_str().unwrap()]).0, 2);
    assert_eq!(dupkit(&["no-such-command"]).0, 2);

    let (code, out) = dupkit(&["verify", "--criteria", "1,4", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("criterion,label,passed,detail"));

    let (a, b) = (dupkit(&["exante", "--config", good.to_str().unwrap()]), dupkit(&["exante", "--config", good.to_str().unwrap(), "--workers", "2"]));
    assert_eq!(a, b);
    std::fs::remove_dir_all(dir).ok();
}
