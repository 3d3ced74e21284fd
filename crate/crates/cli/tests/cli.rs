use std::path::PathBuf;
use std::process::{Command, Output};

use harvest_core::scan::snapshot_config;

fn harvest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harvest"))
        .args(args)
        .env_remove("HARVEST_CONFIG")
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn negativity_scan_writes_table_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("neg.csv");
    let o = harvest(&[
        "scan-negativity",
        "--sweep",
        "dr_w:0:3:3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("# config_sha256: "));
    assert!(csv.contains("\ndr_w,negativity,E1,phi_M,l11,abs_m\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![0.0, 1.5, 3.0]);
    assert!(rows[0][1] > 0.0);
    assert_eq!(rows[2][1], 0.0);
    assert!(dir.path().join("neg.gp").exists());
}

#[test]
fn rows_reproduce_from_snapshot_and_thread_count() {
    let cfg = configs().join("highpass.toml");
    let a = harvest(&[
        "--config",
        cfg.to_str().unwrap(),
        "scan-correlation",
        "--sweep",
        "T:0:300:2",
    ]);
    let b = harvest(&[
        "--config",
        cfg.to_str().unwrap(),
        "--sequential",
        "scan-correlation",
        "--sweep",
        "T:0:300:2",
    ]);
    // The correlation scan requires the unfiltered spectrum.
    assert_eq!(a.status.code(), Some(2));
    assert_eq!(b.status.code(), Some(2));

    let a = harvest(&[
        "--set",
        "beam_separation_um=30",
        "scan-correlation",
        "--sweep",
        "T:0:300:2",
    ]);
    let b = harvest(&[
        "--set",
        "beam_separation_um=30",
        "--threads",
        "1",
        "scan-correlation",
        "--sweep",
        "T:0:300:2",
    ]);
    assert!(a.status.success());
    let (a, b) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(b.stdout).unwrap(),
    );
    assert_eq!(data_rows(&a), data_rows(&b));
    let snap = snapshot_config(&a).unwrap();
    assert!((snap.beam_separation - 30e-6).abs() < 1e-18);
}

#[test]
fn witness_flags_entanglement() {
    let cfg = configs().join("highpass.toml");
    let o = harvest(&["--config", cfg.to_str().unwrap(), "witness"]);
    assert!(o.status.success());
    let rows = data_rows(&String::from_utf8(o.stdout).unwrap());
    let r = &rows[0];
    assert!(r[8] < 0.0);
    assert!((r[8] - r[9]).abs() < 1e-8);
    assert_eq!(r[10], 1.0);
}

#[test]
fn environment_variable_supplies_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_harvest"))
        .args(["scan-bell", "--sweep", "dr_w:0:1:2"])
        .env("HARVEST_CONFIG", configs().join("bell.toml"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows[0].len(), 11);
    assert!(rows[0][1] > 2.0 && rows[0][1] <= 2.0 * 2f64.sqrt() + 1e-9);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["scan-negativity"],
        vec!["scan-negativity", "--sweep", "dr:5:1:3"],
        vec!["scan-negativity", "--sweep", "dr:0:1:1"],
        vec!["--set", "no_such_key=1", "witness"],
        vec!["--set", "beam_waist_um=-1", "witness"],
        vec!["--config", "/nonexistent/harvest.toml", "witness"],
        vec!["scan-bell", "--sweep", "dr:0:1:2"],
        vec!["frobnicate"],
    ] {
        let o = harvest(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn verify_passes_on_baseline() {
    let o = harvest(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",PASS,")));
}

#[test]
fn verify_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.csv");
    let o = harvest(&["--threads", "2", "verify", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("check,status,"));
    assert!(text.lines().count() > 10);
}
