use assert_cmd::Command;

fn lab() -> Command {
    Command::cargo_bin("sobolev-lab").unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = lab().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_float(text: &str, key: &str) -> f64 {
    let pat = format!("\"{key}\":");
    let start = text.find(&pat).unwrap() + pat.len();
    let end = text[start..].find([',', '}']).unwrap();
    text[start..start + end].parse().unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn constants_d3_s1() {
    let out = stdout(&["constants", "--d", "3", "--s", "1"]);
    assert!((json_float(&out, "s_ds") - 5.47790).abs() < 1e-5);
    assert!((json_float(&out, "be_upper") - 0.571429).abs() < 1e-6);
    assert!((json_float(&out, "quartic_constant") - 0.533333).abs() < 1e-6);
    assert!((json_float(&out, "t_star") - std::f64::consts::TAU).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_2() {
    lab().args(["constants", "--d", "3"]).assert().code(2);
    lab().args(["constants", "--d", "3", "--s", "2"]).assert().code(2);
    lab().args(["verify", "everything"]).assert().code(2);
    lab().args(["period-map", "--d", "3", "--alpha-grid", "0.5"]).assert().code(2);
    lab().args(["period-map", "--d", "3", "--alpha-grid", ""]).assert().code(2);
    lab().args(["be-scan", "--d", "3", "--s", "1", "--family", "degree9"]).assert().code(2);
    lab().args(["quartic", "--d", "3", "--eps-grid", "0"]).assert().code(2);
    lab().args(["constants"]).assert().code(2);
}

#[test]
fn period_map_curve() {
    let out = stdout(&["period-map", "--d", "3"]);
    assert_eq!(out.lines().next(), Some("alpha,tau"));
    let tau = csv_column(&out, 1);
    assert_eq!(tau.len(), 50);
    assert!((tau[0] - std::f64::consts::TAU).abs() < 1e-3);
    assert!(tau.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn be_scan_families() {
    let d2 = stdout(&["be-scan", "--d", "3", "--s", "1", "--family", "degree2"]);
    let d3 = stdout(&["be-scan", "--d", "3", "--s", "1", "--family", "degree3"]);
    assert_eq!(d2.lines().next(), Some("eps,quotient,extrapolated_limit"));
    let l2 = csv_column(&d2, 2)[0];
    let l3 = csv_column(&d3, 2)[0];
    assert!((l2 / (4.0 / 7.0) - 1.0).abs() < 1e-2);
    assert!(l3 > l2);
}

#[test]
fn quartic_curve() {
    let out = stdout(&["quartic", "--d", "3", "--eps-grid", "0.01"]);
    assert_eq!(out.lines().next(), Some("eps,quotient,extrapolated_limit"));
    let q = csv_column(&out, 1)[0];
    assert!((q / (8.0 / 15.0) - 1.0).abs() < 2e-2);
}

#[test]
fn verify_cylinder_kernel_dim() {
    let out = stdout(&["verify", "cylinder", "--d", "3", "--T", "9.0"]);
    let line = out.lines().find(|l| l.contains("kernel_dim")).unwrap();
    assert!(line.contains("PASS") && line.contains("2.0000000000000000e0"), "{line}");
}

#[test]
fn verify_failure_exit_1() {
    // d = 2 has no cylinder problem, so the suite fails rather than rejecting the flags
    let out = lab().args(["verify", "cylinder", "--d", "2", "--s", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("first failing invariant: cylinder/"));
}

#[test]
fn verify_all_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        lab()
            .args(["verify", "all", "--d", "3", "--s", "1", "--seed", "11", "--format", "json", "--out"])
            .arg(&path)
            .assert()
            .code(0);
        reports.push(std::fs::read(&path).unwrap());
    }
    assert!(!reports[0].is_empty());
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn config_file_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "d = 4\ns = 1.0\nformat = \"json\"\n").unwrap();
    let from_file = stdout(&["constants", "--config", cfg.to_str().unwrap()]);
    assert!((json_float(&from_file, "be_upper") - 0.5).abs() < 1e-15);
    let flagged = stdout(&["constants", "--config", cfg.to_str().unwrap(), "--d", "3"]);
    assert!((json_float(&flagged, "be_upper") - 4.0 / 7.0).abs() < 1e-15);
    std::fs::write(&cfg, "dimension = 4\n").unwrap();
    lab().args(["constants", "--config", cfg.to_str().unwrap()]).assert().code(2);
}
