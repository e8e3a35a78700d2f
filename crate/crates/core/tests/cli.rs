use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pleader::cli::RunConfig;

fn pleader(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pleader"))
        .current_dir(dir)
        .env_remove("PLEADER_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_cusp(path: &Path, alpha: f64, n: usize) {
    let mut s = String::from("x,value\n");
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        s.push_str(&format!("{x},{}\n", x.abs().powf(alpha)));
    }
    fs::write(path, s).unwrap();
}

fn exponent_at(csv: &str, x0: f64) -> f64 {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| (r[0] - x0).abs() < 1e-12)
        .map(|r| r[2])
        .expect("row for x0")
}

#[test]
fn config_round_trips_and_rejects_unknown_fields() {
    let mut c = RunConfig::default();
    c.seed = 42;
    c.analyze.p = f64::INFINITY;
    c.analyze.regression = Some([1.0 / 1024.0, 0.25]);
    c.process.alpha = -0.7;
    c.verify.tolerances.insert("A1".into(), 0.125);
    let back = RunConfig::from_json(&c.to_json()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
    assert!(c.to_json().contains("\"inf\""));

    let err = RunConfig::from_json(r#"{"format_version":1,"simulate":{"samples":3}}"#).unwrap_err();
    assert!(err.to_string().contains("samples"), "{err}");
    assert!(RunConfig::from_json(r#"{"format_version":1,"bogus":true}"#).is_err());
    assert!(RunConfig::from_json(r#"{"format_version":9}"#).is_err());
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = pleader(
            dir.path(),
            &["simulate", "--seed", "42", "--alpha", "0.5", "--eta", "0.9", "--j-max", "12", "--out", out],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("pulses"));
        assert!(stdout(&o).contains("band 12"));
    }
    for file in ["pulses.json", "path.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let path = fs::read_to_string(dir.path().join("a/path.csv")).unwrap();
    assert!(path.starts_with("# pleader simulate config-sha256="));
    let values: Vec<f64> = path
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4097);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn simulate_rejects_bad_eta() {
    let dir = tempfile::tempdir().unwrap();
    let o = pleader(dir.path(), &["simulate", "--eta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("eta"), "{}", stderr(&o));
}

#[test]
fn analyze_cusp_at_p2() {
    let dir = tempfile::tempdir().unwrap();
    write_cusp(&dir.path().join("cusp.csv"), 0.5, 4097);
    let o = pleader(dir.path(), &["analyze", "--input", "cusp.csv", "--p", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["plane.csv", "leaders.csv", "exponents.csv"] {
        let text = fs::read_to_string(dir.path().join("out").join(f)).unwrap();
        assert!(text.starts_with("# pleader analyze config-sha256="), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("out/exponents.csv")).unwrap();
    let h = exponent_at(&csv, 0.0);
    assert!((h - 0.5).abs() < 0.05, "exponent at the cusp {h}");
}

#[test]
fn analyze_rejects_empty_signal() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let o = pleader(dir.path(), &["analyze", "--input", "empty.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("samples"), "{}", stderr(&o));
}

#[test]
fn analyze_reports_scale_that_does_not_fit() {
    let dir = tempfile::tempdir().unwrap();
    write_cusp(&dir.path().join("cusp.csv"), 0.5, 257);
    fs::write(
        dir.path().join("c.json"),
        r#"{"format_version":1,"analyze":{"a_max":0.75}}"#,
    )
    .unwrap();
    let o = pleader(dir.path(), &["--config", "c.json", "analyze", "--input", "cusp.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("0.75"), "{}", stderr(&o));
}

#[test]
fn pulse_set_input_takes_the_analytic_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = pleader(dir.path(), &["simulate", "--j-max", "10", "--seed", "3", "--out", "sim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(
        dir.path().join("c.json"),
        r#"{"format_version":1,"analyze":{"grid_exponent":10}}"#,
    )
    .unwrap();
    let o = pleader(
        dir.path(),
        &["--config", "c.json", "analyze", "--input", "sim/pulses.json", "--p", "inf", "--out", "an"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("pulse set"));
    let csv = fs::read_to_string(dir.path().join("an/exponents.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 1024);

    let o = pleader(dir.path(), &["spectrum", "--input", "an/exponents.csv", "--out", "sp"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("sp/spectrum.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<!-- pleader spectrum config-sha256="));
    // α = 0.5, p = ∞: D(h) = h/α on [αη, α]
    let csv = fs::read_to_string(dir.path().join("sp/spectrum.csv")).unwrap();
    assert!(csv.contains("h_center,count,dim,theoretical_dim"));
}

#[test]
fn spectrum_surfaces_p_range_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = pleader(
        dir.path(),
        &["spectrum", "--chain", "--alpha", "-0.7", "--eta", "0.5", "--p", "3"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p = 3 outside (1, 1.4286)"), "{}", stderr(&o));
}

#[test]
fn spectrum_chain_draws_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"format_version":1,"process":{"j_max":14},"analyze":{"grid_exponent":10}}"#,
    )
    .unwrap();
    let o = pleader(
        dir.path(),
        &["--config", "c.json", "spectrum", "--chain", "--alpha", "-0.7", "--eta", "0.5", "--p", "1.2"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("theoretical support [-0.3500, 0.1333]"), "{}", stdout(&o));
    let svg = fs::read_to_string(dir.path().join("out/spectrum.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn verify_subset_with_sweep_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = pleader(
        dir.path(),
        &["verify", "--only", "A2,A10", "--tolerance", "A10=1e-9", "--sweep", "5,6"],
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["header"].as_str().unwrap().starts_with("pleader verify config-sha256="));
    let criteria = report["criteria"].as_array().unwrap();
    let names: Vec<&str> = criteria.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["A2", "A10"]);
    assert_eq!(criteria[1]["tolerance"].as_f64(), Some(1e-9));
    for c in criteria {
        for key in ["target", "measured", "tolerance", "pass"] {
            assert!(!c[key].is_null(), "{key} missing");
        }
    }
    assert_eq!(report["all_pass"].as_bool(), Some(true));
}

#[test]
fn verify_failure_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // a tolerance no finite measurement can meet
    let o = pleader(dir.path(), &["verify", "--only", "A5", "--tolerance", "A5=1e-300"]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn verify_rejects_unknown_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = pleader(dir.path(), &["verify", "--only", "A42"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A42"));
}
