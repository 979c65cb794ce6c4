//! End-to-end runs of the res12 binary: every subcommand once, plus the
//! error paths a config author is most likely to hit.

use std::path::Path;
use std::process::{Command, Output};

fn res12(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_res12"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

/// Parse a CSV written by the CLI: one `#` comment, a header, data rows.
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).expect("csv should exist");
    let mut lines = text.lines();
    let comment = lines.next().expect("comment line").to_string();
    assert!(comment.starts_with("# "), "first line must be a # comment: {comment}");
    let header: Vec<String> =
        lines.next().expect("header line").split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|f| f.parse::<f64>().unwrap_or(f64::NAN))
                .collect::<Vec<f64>>()
        })
        .collect();
    (comment, header, rows)
}

fn write_config(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_defaults_match_tracking_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = res12(dir.path(), &["simulate", "--samples", "41"]);
    assert_ok(&out);

    let text = stdout(&out);
    let p: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("final population p = "))
        .expect("summary line")
        .trim()
        .parse()
        .unwrap();
    assert!((p - 0.99750217).abs() < 1e-6, "unexpected final population {p}");

    let (_, header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(
        header,
        ["t", "b1_re", "b1_im", "b2_re", "b2_im", "p", "pi_x", "pi_y", "omega", "delta"]
    );
    assert_eq!(rows.len(), 41);
    // Ground start at t = -8T, transfer essentially complete at +8T.
    assert_eq!(rows[0][0], -8.0);
    assert!(rows[0][5] < 1e-12);
    assert!((rows[40][5] - p).abs() < 1e-12);
}

#[test]
fn simulate_constant_pulse_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.toml",
        "[pulse]\nkind = \"constant\"\nomega = 0.5\ndelta = 0.0\n\n[span]\nstart = 0.0\nend = 4.0\n",
    );
    let out = res12(dir.path(), &["simulate", "--config", &config, "--samples", "9"]);
    assert_ok(&out);
    let p: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("final population p = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    // Resonant flat drive: p = tanh^2(omega t / 2).
    let expect = res12_core::closed_form_population(0.5 * 4.0 / 2.0);
    assert!((p - expect).abs() < 1e-8, "p = {p}, closed form {expect}");

    // Zero drive leaves the ground state untouched.
    let config = write_config(
        dir.path(),
        "zero.toml",
        "[pulse]\nkind = \"constant\"\nomega = 0.0\ndelta = 1.0\n\n[span]\nstart = 0.0\nend = 4.0\n",
    );
    let out = res12(dir.path(), &["simulate", "--config", &config, "--samples", "3"]);
    assert_ok(&out);
    let p: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("final population p = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(p.abs() < 1e-10, "zero drive moved population: {p}");
}

#[test]
fn simulate_accepts_detuning_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.toml",
        "[perturbation]\ndelta0 = -0.6\n",
    );
    let out = res12(dir.path(), &["simulate", "--config", &config, "--samples", "5"]);
    assert_ok(&out);
    let p: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("final population p = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    // Tracking transfer collapses under a -0.6 detuning offset.
    assert!((p - 0.724313).abs() < 1e-3, "perturbed population {p}");
}

#[test]
fn design_adiabatic_reports_area_near_ten_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = res12(dir.path(), &["design", "adiabatic", "--samples", "17"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("9.995729 pi"), "stdout: {}", stdout(&out));

    let (_, header, rows) = read_csv(&dir.path().join("pulse_adiabatic.csv"));
    assert_eq!(header, ["t", "omega", "delta", "p_track"]);
    assert_eq!(rows.len(), 17);
    // Tracked population runs from 0 to 1 with the logistic profile.
    assert!(rows[0][3] < 1e-6 && rows[16][3] > 1.0 - 1e-6);
    let mid = &rows[8];
    assert!((mid[0]).abs() < 1e-12 && (mid[3] - 0.5).abs() < 1e-12);
}

#[test]
fn design_robust_reports_area_and_detuning_form_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = res12(dir.path(), &["design", "robust", "--samples", "101"]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("5.059616 pi"), "stdout: {text}");
    assert!(text.contains("target population = 0.9977809823"), "stdout: {text}");
    let disc: f64 = text
        .lines()
        .find_map(|l| l.rsplit_once("sample grid = ").map(|(_, v)| v))
        .expect("discrepancy line")
        .trim()
        .parse()
        .unwrap();
    // The shortcut detuning form disagrees wherever d(theta)/dt != 1.
    assert!(disc > 1.0, "discrepancy {disc}");

    let (_, header, rows) = read_csv(&dir.path().join("pulse_robust.csv"));
    assert_eq!(header, ["t", "theta", "alpha", "gamma", "omega", "delta"]);
    assert_eq!(rows.len(), 101);
    let theta_end = rows[100][1];
    assert!((theta_end - std::f64::consts::PI * 0.97).abs() < 1e-6);
}

#[test]
fn portrait_exports_fixed_points_separatrix_and_contours() {
    let dir = tempfile::tempdir().unwrap();
    let out = res12(dir.path(), &["portrait"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("3 fixed points, separatrix present"), "{}", stdout(&out));

    let text = std::fs::read_to_string(dir.path().join("portrait.csv")).unwrap();
    let fp_rows: Vec<&str> = text.lines().filter(|l| l.starts_with("fp")).collect();
    assert_eq!(fp_rows.len(), 3);
    // The target pole row carries no phase.
    assert!(fp_rows.iter().any(|l| l.contains("NaN") && l.ends_with("hyperbolic")));
    assert!(text.lines().filter(|l| l.starts_with("separatrix")).count() >= 100);
    assert!(text.lines().any(|l| l.starts_with("contour0")));
}

#[test]
fn portrait_snapshot_of_a_sweep_flips_target_stability_with_offset_sign() {
    let dir = tempfile::tempdir().unwrap();
    // Freeze the tracking sweep late in the transfer; a negative detuning
    // offset keeps the target hyperbolic, a positive one closes the
    // separatrix and makes it elliptic.
    for (delta0, expect) in [("-0.6", "separatrix present"), ("0.6", "separatrix absent")] {
        let config = write_config(
            dir.path(),
            "port.toml",
            &format!("time = 1.2\ndelta0 = {delta0}\n\n[pulse]\nkind = \"tracking\"\n"),
        );
        let out = res12(dir.path(), &["portrait", "--config", &config]);
        assert_ok(&out);
        assert!(stdout(&out).contains(expect), "delta0={delta0}: {}", stdout(&out));
    }
}

#[test]
fn scan_1d_writes_profile_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scan.toml", "delta0 = \"-0.6:0.6:5\"\n");
    let out = res12(dir.path(), &["scan", "1d", "--config", &config, "--jobs", "1"]);
    assert_ok(&out);

    let (comment, header, rows) = read_csv(&dir.path().join("scan.csv"));
    assert!(comment.contains("scan 1d"));
    assert_eq!(header, ["delta0", "beta", "fidelity"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], -0.6);
    assert_eq!(rows[4][0], 0.6);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] > 0.0 && r[2] <= 1.0));
    // Flat-top profile of the default single-coefficient robust pulse.
    assert!((rows[0][2] - 0.9973).abs() < 1e-3, "edge fidelity {}", rows[0][2]);

    let meta: toml::Value =
        std::fs::read_to_string(dir.path().join("scan.meta.toml")).unwrap().parse().unwrap();
    assert_eq!(meta["command"].as_str(), Some("scan 1d"));
    assert!(meta["pulse"].as_str().unwrap().starts_with("robust"));
    assert_eq!(meta["t_span"][1].as_float(), Some(4.0));
    assert!(meta["rel_tol"].as_float().unwrap() > 0.0);
    assert_eq!(meta["delta0"].as_str(), Some("-0.6:0.6:5"));
}

#[test]
fn scan_2d_grid_is_row_major() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "scan.toml",
        "delta0 = \"-0.5:0.5:3\"\nbeta = \"-0.1:0.1:3\"\n",
    );
    let out = res12(dir.path(), &["scan", "2d", "--config", &config, "--jobs", "2"]);
    assert_ok(&out);

    let (_, header, rows) = read_csv(&dir.path().join("scan.csv"));
    assert_eq!(header, ["delta0", "beta", "fidelity"]);
    assert_eq!(rows.len(), 9);
    // delta0 varies slowest.
    assert_eq!((rows[0][0], rows[0][1]), (-0.5, -0.1));
    assert_eq!((rows[1][0], rows[1][1]), (-0.5, 0.0));
    assert_eq!((rows[3][0], rows[3][1]), (0.0, -0.1));
    assert!(rows.iter().all(|r| r[2] > 0.0 && r[2] <= 1.0));
    // Unperturbed center point of the default tracking pulse.
    assert!((rows[4][2] - 0.99750217).abs() < 1e-6);

    let meta: toml::Value =
        std::fs::read_to_string(dir.path().join("scan.meta.toml")).unwrap().parse().unwrap();
    assert_eq!(meta["command"].as_str(), Some("scan 2d"));
    assert_eq!(meta["beta"].as_str(), Some("-0.1:0.1:3"));
}

#[test]
fn optimize_trace_covers_every_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "opt.toml",
        "n = 1\nbudget = 25\ncoarse = [5, 1]\nfine = [9, 1]\nsimplex_scale = 0.5\n",
    );
    let out = res12(dir.path(), &["optimize", "--config", &config]);
    assert_ok(&out);

    let best: toml::Value =
        std::fs::read_to_string(dir.path().join("best.toml")).unwrap().parse().unwrap();
    let evals = best["evaluations"].as_integer().unwrap() as usize;
    assert_eq!(evals, 25);
    assert_eq!(best["coefficients"].as_array().unwrap().len(), 1);
    assert_eq!(best["seed"].as_integer(), Some(20260824));
    assert!(best["fine_objective"].as_float().unwrap() > 0.9);

    let (_, header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, ["eval_index", "c1", "objective"]);
    assert_eq!(rows.len(), evals);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[24][0], 24.0);
    // The trace maximum is the reported coarse objective.
    let best_seen = rows.iter().map(|r| r[2]).fold(f64::NEG_INFINITY, f64::max);
    assert!((best_seen - best["coarse_objective"].as_float().unwrap()).abs() < 1e-12);
}

#[test]
fn area_defaults_to_tracking_pulse() {
    let dir = tempfile::tempdir().unwrap();
    let out = res12(dir.path(), &["area"]);
    assert_ok(&out);
    assert!(stdout(&out).contains("9.995729 pi"), "stdout: {}", stdout(&out));
}

#[test]
fn amplitude_error_at_or_below_minus_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scan.toml", "beta = \"-1.5:0.1:3\"\n");
    let out = res12(dir.path(), &["scan", "2d", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("1 + beta"), "stderr: {}", stderr(&out));
}

#[test]
fn runaway_design_coefficients_fail_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "scan.toml",
        "[pulse]\nkind = \"robust\"\ncoefficients = [2e6]\n",
    );
    let out = res12(dir.path(), &["scan", "1d", "--config", &config]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("invalid design") && err.contains("theta"), "stderr: {err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.toml", "unknown_key = 3\n");
    let out = res12(dir.path(), &["area", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown field"), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.toml", "delta0 = \"abc\"\n");
    let out = res12(dir.path(), &["scan", "1d", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("lo:hi:n"), "stderr: {}", stderr(&out));
}

#[test]
fn constant_pulse_requires_explicit_span() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.toml",
        "[pulse]\nkind = \"constant\"\nomega = 1.0\ndelta = 0.0\n",
    );
    let out = res12(dir.path(), &["area", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("natural span"), "stderr: {}", stderr(&out));
}

#[test]
fn worker_env_var_must_parse() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_res12"))
        .args(["area", "--out"])
        .arg(dir.path())
        .env("RES12_JOBS", "zzz")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("RES12_JOBS"), "stderr: {}", stderr(&out));
}

#[test]
fn pulse_kind_fields_are_cross_checked() {
    let dir = tempfile::tempdir().unwrap();
    // A tracking pulse must not silently ignore robust-only fields.
    let config = write_config(
        dir.path(),
        "bad.toml",
        "[pulse]\nkind = \"tracking\"\nepsilon = 0.05\n",
    );
    let out = res12(dir.path(), &["area", "--config", &config]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("does not apply"), "stderr: {}", stderr(&out));
}
