//! End-to-end tests of the `nemscat` binary: exit codes, file emission,
//! determinism across the `NEMSCAT_THREADS` knob.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nemscat(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nemscat"));
    cmd.args(args).arg("--out-dir").arg(dir);
    if let Some(n) = threads {
        cmd.env("NEMSCAT_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const ORACLE_CONFIG: &str = r#"{
    "mode": "dimensionless",
    "model": {"chi": 1.0, "omega": 0.25, "kappa": 0.5},
    "damping": {"gamma_a": 0.02, "gamma_b": 0.05},
    "initial": {"alpha0_re": 0.4, "alpha0_im": 0.0, "beta0_re": 0.6, "beta0_im": 0.0},
    "time": {"t_max": 0.4, "n_points": 3},
    "oracle": {"n_a": 10, "n_b": 10, "dt": 0.01},
    "outputs": ["oracle_compare"]
}"#;

const DEVICE_CONFIG: &str = r#"{
    "mode": "device-units",
    "device": {
        "charging_energy": 5.272859085e-25,
        "josephson_energy": 5.272859085e-25,
        "dc_gate_charge": 0.5,
        "gate_capacitance": 1e-15,
        "island_capacitance": 1e-14,
        "inductance": 1e-9,
        "cavity_capacitance": 1e-12,
        "cavity_frequency": 1e9,
        "nems_frequency": 1e9,
        "nems_mass": 1e-21,
        "gap_distance": 2e-8,
        "detuning": 1e6,
        "cavity_coupling_override": 6e6
    },
    "damping": {"gamma_a": 0.0, "gamma_b": 0.0},
    "initial": {"alpha0_re": 0.0, "alpha0_im": 0.0, "beta0_re": 1.0, "beta0_im": 0.0},
    "time": {"t_max": 1e-6, "n_points": 11},
    "outputs": ["p_minus"]
}"#;

#[test]
fn figure_preset_writes_csv_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = nemscat(&["figure", "fig2", "--format", "both"], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fig2_p_minus.csv")).unwrap();
    assert!(csv.starts_with("t,p_minus,visibility,phase\n"));
    assert_eq!(csv.lines().count(), 1002);
    let svg = fs::read_to_string(dir.path().join("fig2_p_minus.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let manifest = fs::read_to_string(dir.path().join("fig2_manifest.json")).unwrap();
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn decay_figures_emit_caption_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = nemscat(&["figure", "fig4"], dir.path(), None);
    assert!(out.status.success());
    assert!(dir.path().join("fig4_decoherence.csv").exists());
    assert!(dir.path().join("fig4_caption_decoherence.csv").exists());
}

#[test]
fn unknown_figure_exits_2_and_lists_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = nemscat(&["figure", "fig9"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for name in ["fig2", "fig3-orbits", "fig4", "fig5", "fig6"] {
        assert!(stderr.contains(name), "{stderr}");
    }
}

#[test]
fn unknown_config_key_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = ORACLE_CONFIG.replace("\"chi\": 1.0", "\"chi\": 1.0, \"bogus_key\": 1");
    let config = write_config(dir.path(), "bad.json", &bad);
    let out = nemscat(&["simulate", "--config", &config], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn missing_config_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = nemscat(
        &["simulate", "--config", "/nonexistent/nowhere.json"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_without_oracle_section_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value = serde_json::from_str(ORACLE_CONFIG).unwrap();
    value.as_object_mut().unwrap().remove("oracle");
    let config = write_config(dir.path(), "no_oracle.json", &value.to_string());
    let out = nemscat(&["oracle", "--config", &config], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coarse_oracle_step_exits_3_with_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    // Strong exchange, visible amplitude, one-unit spans: half a unit per
    // RK4 step genuinely fails the step-doubling gate.
    let coarse = r#"{
        "mode": "dimensionless",
        "model": {"chi": 1.0, "omega": 1.0, "kappa": 1.0},
        "damping": {"gamma_a": 0.05, "gamma_b": 0.05},
        "initial": {"alpha0_re": 0.0, "alpha0_im": 0.0, "beta0_re": 0.8, "beta0_im": 0.0},
        "time": {"t_max": 2.0, "n_points": 3},
        "oracle": {"n_a": 10, "n_b": 10, "dt": 0.5},
        "outputs": ["oracle_compare"]
    }"#;
    let config = write_config(dir.path(), "coarse.json", coarse);
    let out = nemscat(&["oracle", "--config", &config], dir.path(), None);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("retry with dt"));
}

#[test]
fn sweep_with_one_step_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "base.json", ORACLE_CONFIG);
    let out = nemscat(
        &[
            "sweep", "--config", &config, "--param", "model.kappa", "--from", "0.1", "--to",
            "1.0", "--steps", "1",
        ],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_output_is_byte_identical_across_thread_counts() {
    let dir_one = tempfile::tempdir().unwrap();
    let dir_four = tempfile::tempdir().unwrap();
    let config_one = write_config(dir_one.path(), "oracle.json", ORACLE_CONFIG);
    let config_four = write_config(dir_four.path(), "oracle.json", ORACLE_CONFIG);

    let out = nemscat(&["oracle", "--config", &config_one], dir_one.path(), Some("1"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = nemscat(&["oracle", "--config", &config_four], dir_four.path(), Some("4"));
    assert!(out.status.success());

    let csv_one = fs::read(dir_one.path().join("oracle_compare.csv")).unwrap();
    let csv_four = fs::read(dir_four.path().join("oracle_compare.csv")).unwrap();
    assert_eq!(csv_one, csv_four, "thread count changed oracle bytes");

    // And the numerical/closed columns agree with each other on this easy
    // scenario.
    let text = String::from_utf8(csv_one).unwrap();
    assert!(text.starts_with(
        "t,re_f_num,im_f_num,re_f_closed,im_f_closed,abs_err_f,p_minus_num,p_minus_closed,fidelity_pp,fidelity_mm\n"
    ));
    let last = text.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    let abs_err_f = fields[5];
    assert!(abs_err_f < 1e-4, "oracle vs closed forms drifted: {abs_err_f}");
}

#[test]
fn couplings_pipeline_matches_the_direct_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "device.json", DEVICE_CONFIG);
    let out = nemscat(&["couplings", "--config", &config], dir.path(), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("couplings.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let get = |name: &str| values[header.iter().position(|h| *h == name).unwrap()];
    assert!((get("x_rms") - 7.2614e-12).abs() < 1e-15);
    assert!((get("lambda") - 3.6307e6).abs() < 1e2);
    assert_eq!(get("g"), 6e6);
    assert!((get("kappa") * get("kappa") - get("chi") * get("omega")).abs()
        < 1e-9 * get("chi") * get("omega"));
    // theta = pi/2 at the degeneracy point.
    assert!((get("theta") - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = nemscat(&["figure", "fig6", "--format", "both"], dir.path(), None);
        assert!(out.status.success());
    }
    for file in ["fig6_p_minus.csv", "fig6_p_minus.svg"] {
        let a = fs::read(dir_a.path().join(file)).unwrap();
        let b = fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}
