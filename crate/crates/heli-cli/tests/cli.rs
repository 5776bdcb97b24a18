//! End-to-end tests of the `helictl` binary: exit codes, artifacts,
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn helictl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helictl"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SHORT_SCENARIO: &str = "\
[scenario]
name = short
[runtime]
t_end = 5.0
theta_d_deg = 0.0
psi_d_deg = 10.0
theta0_deg = -40.5
psi0_deg = 0.0
";

#[test]
fn simulate_emits_csv_and_svg() {
    let dir = tmp_dir("simulate_basic");
    let cfg = dir.join("scenario.ini");
    write(&cfg, SHORT_SCENARIO);
    let out = helictl()
        .args(["simulate", cfg.to_str().unwrap(), "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let trace = dir.join("out/short/trace.csv");
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("t_s,theta_rad,psi_rad,"));
    assert_eq!(csv.lines().count(), 5002); // header + 5001 rows

    for plot in ["pitch.svg", "yaw.svg", "voltages.svg"] {
        let svg = std::fs::read_to_string(dir.join("out/short").join(plot)).unwrap();
        assert!(svg.starts_with("<?xml"), "{plot} must be XML");
        assert!(svg.trim_end().ends_with("</svg>"), "{plot} must close");
        let polylines = svg.matches("<polyline").count();
        let expect = if plot == "voltages.svg" { 2 } else { 1 };
        assert_eq!(polylines, expect, "{plot}: one polyline per series");
        assert!(
            svg.contains("stroke-dasharray"),
            "{plot}: reference line present"
        );
    }
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tmp_dir("simulate_determinism");
    let cfg = dir.join("scenario.ini");
    write(
        &cfg,
        "[scenario]\nname = d\n[runtime]\nt_end = 3.0\n[disturbance]\nkind = piecewise\nseed = 4\ndwell = 0.5\namplitude = 0.05\n",
    );
    for sub in ["a", "b"] {
        let out = helictl()
            .args([
                "simulate",
                cfg.to_str().unwrap(),
                "--format",
                "csv",
                "--out",
            ])
            .arg(dir.join(sub))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    let a = std::fs::read(dir.join("a/d/trace.csv")).unwrap();
    let b = std::fs::read(dir.join("b/d/trace.csv")).unwrap();
    assert_eq!(a, b, "identical config must give identical bytes");

    // a different seed changes the disturbance, and with it the bytes
    let out = helictl()
        .args([
            "simulate",
            cfg.to_str().unwrap(),
            "--format",
            "csv",
            "--seed",
            "9",
            "--out",
        ])
        .arg(dir.join("c"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let c = std::fs::read(dir.join("c/d/trace.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn empty_config_exits_zero_without_artifacts() {
    let dir = tmp_dir("simulate_empty");
    let cfg = dir.join("empty.ini");
    write(&cfg, "# nothing here\n");
    let out = helictl()
        .args(["simulate", cfg.to_str().unwrap(), "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.join("out").exists());
}

#[test]
fn schema_errors_exit_two_with_line() {
    let dir = tmp_dir("simulate_schema");
    let cfg = dir.join("bad.ini");
    write(&cfg, "[scenario]\n[gains]\npreset = bogus\n");
    let out = helictl()
        .args(["simulate", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("bad.ini:3"),
        "line-precise message, got: {err}"
    );
    assert!(err.contains("bogus"));
}

#[test]
fn divergence_exits_three_with_timestamp() {
    let dir = tmp_dir("simulate_diverge");
    let cfg = dir.join("div.ini");
    write(
        &cfg,
        "\
[scenario]
name = runaway
[gains]
k1 = -40\nk2 = -40\nk3 = -4\nk4 = -40\nk5 = -40\nk6 = -4
[runtime]
t_end = 20.0
saturation = off
travel_limits = off
",
    );
    let out = helictl()
        .args(["simulate", cfg.to_str().unwrap(), "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("diverged at t ="), "{}", stderr(&out));
}

#[test]
fn design_prints_pinned_values() {
    let out = helictl()
        .args(["design", "--overshoot", "0.01", "--settling", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("zeta: 0.826085"), "{text}");
    assert!(text.contains("wn_rad_per_s: 1.210529"), "{text}");

    let out = helictl()
        .args(["design", "--overshoot", "0.5", "--settling", "1"])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("zeta: 0.215454"));
}

#[test]
fn design_solves_gains_with_round_trip() {
    let out = helictl()
        .args([
            "design",
            "--overshoot",
            "0.05",
            "--settling",
            "2",
            "--plant",
            "0,0",
            "--emit-config",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("b0:"), "{text}");
    assert!(text.contains("[gains]"), "{text}");
}

#[test]
fn design_rejects_bad_spec() {
    let out = helictl()
        .args(["design", "--overshoot", "1.5", "--settling", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // missing required flags: clap usage error
    let out = helictl()
        .args(["design", "--overshoot", "0.1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = helictl().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_writes_report() {
    let dir = tmp_dir("certify_ok");
    let cfg = dir.join("cert.ini");
    write(&cfg, "[scenario]\nname = cert\n");
    let out = helictl()
        .args([
            "certify",
            cfg.to_str().unwrap(),
            "--runs",
            "10",
            "--horizon",
            "40",
            "--out",
        ])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = std::fs::read_to_string(dir.join("out/cert/certificate.txt")).unwrap();
    for key in [
        "report: stability-certificate",
        "eigenvalue_1:",
        "eigenvalue_6:",
        "beta:",
        "kappa:",
        "gamma:",
        "z0_max:",
        "boundedness: pass",
        "convergence: pass",
        "zero_start_bound: trivially satisfied",
        "traj 010:",
    ] {
        assert!(report.contains(key), "report missing `{key}`:\n{report}");
    }
    assert!(stdout(&out).contains("certificate pass"));
}

#[test]
fn certify_unstable_exits_four() {
    let dir = tmp_dir("certify_unstable");
    let cfg = dir.join("cert.ini");
    // sign-flipped k1 destabilizes the pitch chain
    write(
        &cfg,
        "[scenario]\nname = bad\n[gains]\nk1 = -1.7431\nk2 = 2.4095\nk3 = 0.3849\nk4 = 1.8398\nk5 = 2.5431\nk6 = 0.9326\n",
    );
    let out = helictl()
        .args(["certify", cfg.to_str().unwrap(), "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("offending eigenvalues"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn disturbance_csv_import_runs() {
    let dir = tmp_dir("simulate_csv_dist");
    write(
        &dir.join("dist.csv"),
        "t,value,axis\n1.0,0.05,pitch\n2.5,0.0,pitch\n1.5,0.02,yaw\n",
    );
    let cfg = dir.join("scenario.ini");
    write(
        &cfg,
        "[scenario]\nname = csvdist\n[runtime]\nt_end = 4.0\n[disturbance]\nkind = csv\nfile = dist.csv\n",
    );
    let out = helictl()
        .args([
            "simulate",
            cfg.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
        ])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let csv = std::fs::read_to_string(dir.join("out/csvdist/trace.csv")).unwrap();
    // the disturbance column reflects the imported table after t = 1 s
    let row_after: Vec<&str> = csv.lines().nth(1201).unwrap().split(',').collect();
    let dist_pitch: f64 = row_after[17].parse().unwrap();
    assert!((dist_pitch - 0.05).abs() < 1e-12);
}
