use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dusa");

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn lowerbound_prints_value() {
    let out = Command::new(BIN).args(["lowerbound", &config("two-arm.toml")]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.lines().find_map(|l| l.trim().strip_prefix("value ")).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((value - 9.949916).abs() < 1e-4, "{value}");
    assert!(text.contains("deceitful [0]"));
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    let out = Command::new(BIN).args(["run", &config("two-arm.toml"), "-o", csv.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = dusa_harness::runner::read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 40);
    assert!(rows.iter().filter(|r| r.policy == "oracle").all(|r| r.cum_regret == 0.0));
    assert!(dusa_harness::runner::summary_path(&csv).exists());
}

#[test]
fn validate_suite_and_errors() {
    let out = Command::new(BIN).args(["validate", "decomposition"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().lines().all(|l| l.starts_with("PASS")));
    let out = Command::new(BIN).args(["validate", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN).args(["lowerbound", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_program_writes_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prog.txt");
    let out = Command::new(BIN).args(["dump-program", &config("two-arm.toml"), "-o", path.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 5);
}
