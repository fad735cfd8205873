use std::process::{Command, Output};

fn elliptail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elliptail")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = elliptail(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

/// 1 - Φ(1)
const GAUSS_SF_1: f64 = 0.158_655_253_931_457_05;

#[test]
fn exact_matches_independent_gaussian() {
    let out = stdout(&["exact", "--rho", "0", "--x", "1", "--y", "1"]);
    let v = column(&out, "value")[0];
    let expected = GAUSS_SF_1 * GAUSS_SF_1;
    assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
}

#[test]
fn exact_cross_check_reports_both_forms() {
    let out = stdout(&["exact", "--rho", "0.5", "--x", "4", "--y", "3", "--cross-check"]);
    let a = column(&out, "value")[0];
    let b = column(&out, "iform_value")[0];
    assert!((a - b).abs() <= 1e-11 * a.max(1e-300) + 1e-20);
}

#[test]
fn converge_ratios_approach_one() {
    let out = stdout(&["converge", "--regime", "1a", "--x-grid", "4,6,8"]);
    let r = column(&out, "ratio");
    assert_eq!(r.len(), 3);
    assert!((r[2] - 1.0).abs() < (r[1] - 1.0).abs());
    assert!((r[1] - 1.0).abs() < (r[0] - 1.0).abs());
}

#[test]
fn asymptotic_reports_regime_and_corrections() {
    let out = stdout(&["asymptotic", "--rho", "0.5", "--x", "6", "--y", "1.8"]);
    assert!(out.lines().nth(1).unwrap().contains(",thm1c,"));
    let out = stdout(&["asymptotic", "--regime", "1b", "--rho", "0.5", "--x", "6", "--z", "0"]);
    assert!(column(&out, "correction_total")[0] > 0.0);
    assert!(column(&out, "y")[0] > 3.0);
    let out = elliptail(&["asymptotic", "--regime", "1a", "--x", "6"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_is_byte_identical_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_elliptail"))
            .env("ELLIPTAIL_THREADS", threads)
            .args(["simulate", "--rho", "0.5", "--n", "20000", "--seed", "9", "--out"])
            .arg(p)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y"));
    assert_eq!(lines.count(), 20000);

    let q = stdout(&["estimate", "--pairs", a.to_str().unwrap(), "--x", "1", "--q", "0.9"]);
    let y = column(&q, "y_hat")[0];
    assert!(y > 1.0);
    let p = stdout(&["estimate", "--pairs", a.to_str().unwrap(), "--x", "1", "--y", &format!("{y:.17e}")]);
    let psi = column(&p, "psi_hat")[0];
    assert!((psi - 0.1).abs() < 1e-10, "{psi}");
    assert!((column(&p, "rho_hat")[0] - 0.5).abs() < 0.05);
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let out = elliptail(&["exact", "--model", "/nonexistent/m.json", "--x", "1", "--y", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("m.json"));
    let out = elliptail(&["exact", "--rho", "1.5", "--x", "1", "--y", "1"]);
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_elliptail"))
        .env("ELLIPTAIL_THREADS", "zero")
        .args(["exact", "--x", "1", "--y", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ELLIPTAIL_THREADS"));
}

#[test]
fn model_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"family":"kotz","C":1.0,"N":0.0,"c":0.5,"delta":2.0}"#).unwrap();
    let a = stdout(&["exact", "--model", m.to_str().unwrap(), "--rho", "0.3", "--x", "2", "--y", "1"]);
    let b = stdout(&["exact", "--rho", "0.3", "--x", "2", "--y", "1"]);
    assert_eq!(column(&a, "value"), column(&b, "value"));
}

#[test]
fn help_lists_defaults() {
    for sub in ["exact", "asymptotic", "converge", "simulate", "estimate"] {
        let h = stdout(&[sub, "--help"]);
        assert!(h.contains("[default:"), "{sub}");
    }
    assert!(stdout(&["--help"]).contains("ELLIPTAIL_THREADS"));
}
