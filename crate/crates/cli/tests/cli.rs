use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spatial_risk_cli::commands::{CURVE_COLUMNS, RISK_COLUMNS, STUDY_COLUMNS};
use spatial_risk_cli::Table;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-risk"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, json: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["risk", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "bad.json", "{\"risk\": {");
    let out = run(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unsupported_shape_names_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "tri.json",
        r#"{"risk": {"region": {"shape": "triangle", "size": 1},
            "correlation": {"family": "exponential", "theta": 1}, "threshold": {"u": 0}}}"#,
    );
    let out = run(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unsupported shape"), "{}", stderr(&out));
}

#[test]
fn record_must_match_command() {
    let cfg = configs().join("piemonte.json");
    let out = run(&["curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_threads_and_bad_tolerance_are_config_errors() {
    assert_eq!(run(&["risk", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(run(&["risk", "--tolerance=-1"]).status.code(), Some(1));
}

#[test]
fn impossible_tolerances_fail_validation() {
    let out = run(&["validate", "--corrupt-tolerance"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out_a = run(&["validate", "--threads", "1", "--out", a.to_str().unwrap()]);
    let out_b = run(&["validate", "--threads", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(out_a.status.code(), Some(0), "{}", String::from_utf8_lossy(&out_a.stdout));
    assert_eq!(out_b.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let hash = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("report sha256"))
            .map(str::to_owned)
            .expect("hash line")
    };
    assert_eq!(hash(&out_a), hash(&out_b));
}

fn risk_table(cfg: &str, dir: &tempfile::TempDir, name: &str) -> Table {
    let path = dir.path().join(name);
    let out = run(&["risk", "--config", cfg, "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    Table::from_csv(&RISK_COLUMNS, &std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn probability_and_level_thresholds_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"{"risk": {"region": {"shape": "disk", "size": 1},
        "correlation": {"family": "gaussian", "theta": 0.5},
        "marginal": {"mu": 2, "sigma2": 4}, "threshold": THRESHOLD}}"#;
    // Standard-normal 0.75 quantile mapped through mu + sigma * z.
    let u = 2.0 + 2.0 * 0.674_489_750_196_081_7;
    let by_p = write_config(&dir, "p.json", &base.replace("THRESHOLD", r#"{"p": 0.75}"#));
    let by_u = write_config(&dir, "u.json", &base.replace("THRESHOLD", &format!("{{\"u\": {u}}}")));
    let tp = risk_table(&by_p, &dir, "p.csv");
    let tu = risk_table(&by_u, &dir, "u.csv");
    for col in ["r0", "r1"] {
        let i = RISK_COLUMNS.iter().position(|c| c.0 == col).unwrap();
        let (a, b) = (tp.rows()[0][i].as_f64().unwrap(), tu.rows()[0][i].as_f64().unwrap());
        assert!((a - b).abs() < 1e-12, "{col}: {a} vs {b}");
    }
}

#[test]
fn piemonte_config_reproduces_r0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("piemonte.json");
    let t = risk_table(cfg.to_str().unwrap(), &dir, "r.csv");
    let r0 = t.rows()[0][0].as_f64().unwrap();
    assert!((r0 - 0.3483621).abs() < 1e-4, "{r0}");
}

#[test]
fn csv_has_fixed_header_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let cfg = configs().join("g_vs_h.json");
    let out = run(&["curve", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("family,quantity,axis,x,value"));
    let table = Table::from_csv(&CURVE_COLUMNS, &text).unwrap();
    assert_eq!(table.to_csv().unwrap(), text);
    for line in text.lines().skip(1) {
        let value = line.rsplit(',').next().unwrap();
        let mantissa = value.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{value}");
    }
}

#[test]
fn lambda_sweep_is_non_increasing() {
    let cfg = configs().join("r1_vs_lambda.json");
    let out = run(&["curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = Table::from_csv(&CURVE_COLUMNS, &String::from_utf8_lossy(&out.stdout)).unwrap();
    let mut last: Option<(String, f64)> = None;
    let mut rows = 0;
    for row in table.rows() {
        let family = row[0].as_text().unwrap().to_owned();
        let v = row[4].as_f64().unwrap();
        if let Some((f, prev)) = &last {
            if *f == family {
                assert!(v <= prev + 1e-12, "{family}: {v} after {prev}");
            }
        }
        last = Some((family, v));
        rows += 1;
    }
    assert_eq!(rows, 500);
}

#[test]
fn mc_study_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "study.json",
        r#"{"mc": {"study": {"region": {"shape": "square", "size": 1},
            "families": ["exponential", "spherical"], "theta": 0.5, "probabilities": [0.75],
            "runs": 4, "mc": {"n_points": 36, "m_reps": 100}}}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (threads, path) in [("1", &a), ("4", &b)] {
        let out = run(&["mc", "--config", &cfg, "--seed", "11", "--threads", threads, "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap().as_slice());
    let table = Table::from_csv(&STUDY_COLUMNS, &text).unwrap();
    assert_eq!(table.rows().len(), 8);
}

#[test]
fn seed_changes_monte_carlo_output() {
    let cfg = configs().join("estimate.json");
    let cfg = cfg.to_str().unwrap();
    let a = run(&["mc", "--config", cfg, "--seed", "1"]);
    let b = run(&["mc", "--config", cfg, "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_with_config_code() {
    assert_eq!(run(&["risk", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
