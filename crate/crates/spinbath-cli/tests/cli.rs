//! End-to-end checks of the command-line interface: exit codes, CSV
//! formatting, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::Command;

fn spinbath() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinbath"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const CS_CONFIG: &str = r#"{
    "model": "central-spin",
    "params": {"omega0": 1.5, "omega": 1.0, "n_bath": 8, "epsilon": 0.5, "beta": 0.5},
    "initial_state": {"amplitudes": [[0.8660254037844386, 0.0], [0.5, 0.0]], "mixing_p": 1.0},
    "t_max": 4.0,
    "n_points": 41,
    "outputs": ["state", "rates", "choi", "kraus", "thermo", "master-eq-check"]
}"#;

const RTN_CONFIG: &str = r#"{
    "model": "rtn",
    "params": {"omega0": 1.5, "epsilon": 0.5, "n_bath": 50, "gamma": 1.0},
    "initial_state": {"amplitudes": [[0.8660254037844386, 0.0], [0.5, 0.0]]},
    "t_max": 6.0,
    "n_points": 31,
    "outputs": ["state", "rates", "thermo", "kraus", "master-eq-check"],
    "seed": 42,
    "mc_trajectories": 1000
}"#;

#[test]
fn run_emits_all_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cs.json", CS_CONFIG);
    let out = dir.path().join("out");
    let status = spinbath()
        .args(["run", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["state.csv", "rates.csv", "choi.csv", "kraus.csv", "thermo.csv", "master_eq_check.csv", "scenario.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let text = fs::read_to_string(out.join("thermo.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# spinbath "));
    assert!(lines.next().unwrap().starts_with("# config-hash: "));
    lines.next();
    assert!(lines.next().unwrap().starts_with("# model=central-spin"));
    assert_eq!(lines.next().unwrap(), "t,J,J_passive,P,W,x,y,z");
    // 17 significant digits, '.' decimal, ',' delimiter
    let first = lines.next().unwrap();
    assert!(first.split(',').count() == 8);
    assert!(first.contains("e0") || first.contains("e-"));
}

#[test]
fn runs_are_byte_identical_for_fixed_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "rtn.json", RTN_CONFIG);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = spinbath()
            .args(["run", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["state.csv", "rates.csv", "thermo.csv", "kraus.csv", "master_eq_check.csv", "scenario.json"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across runs");
    }
    // gamma = 1 is underdamped: the dephasing factor crosses zero inside the
    // window, and the rates sidecar must report those singular instants.
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("rates.meta.json")).unwrap()).unwrap();
    assert!(!meta["singular_times"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    // unknown key
    let bad = write_config(dir.path(), "bad.json", r#"{"model": "rtn", "bogus": 1}"#);
    let status = spinbath().args(["run", bad.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown parameter inside the params block
    let bad = write_config(
        dir.path(),
        "bad2.json",
        &CS_CONFIG.replace("\"epsilon\"", "\"epsilonn\""),
    );
    let status = spinbath().args(["run", bad.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    // degenerate grid
    let bad = write_config(dir.path(), "bad3.json", &CS_CONFIG.replace("\"n_points\": 41", "\"n_points\": 1"));
    let status = spinbath().args(["run", bad.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn rates_subcommand_requires_central_spin() {
    let dir = tempfile::tempdir().unwrap();
    let rtn = write_config(dir.path(), "rtn.json", RTN_CONFIG);
    let status = spinbath()
        .args(["rates", rtn.to_str().unwrap(), "--out-dir", dir.path().join("r").to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let cs = write_config(dir.path(), "cs.json", CS_CONFIG);
    let out = dir.path().join("rates_out");
    let status = spinbath()
        .args(["rates", cs.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("rates.csv")).unwrap();
    let header = text.lines().nth(4).unwrap();
    assert_eq!(header, "t,zeta,Gamma,theta_re,theta_im,nu_plus,nu_minus,nu_z");
    // definition identity nu_z = (zeta - Gamma - 2 Re theta)/4, row-wise
    for line in text.lines().skip(5) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (t, zeta, gamma, theta_re, nu_plus, nu_minus, nu_z) =
            (v[0], v[1], v[2], v[3], v[5], v[6], v[7]);
        assert!((nu_z - (zeta - gamma - 2.0 * theta_re) / 4.0).abs() < 1e-12, "t = {t}");
        assert!((nu_plus - gamma).abs() < 1e-15);
        assert!((nu_minus + zeta).abs() < 1e-15);
        if t == 0.0 {
            assert!(nu_plus.abs() < 1e-12 && nu_minus.abs() < 1e-12);
        }
    }
}

#[test]
fn verify_inject_fault_exits_with_code_1() {
    let status = spinbath().args(["verify", "--inject-fault", "--mc-traj", "2000"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_passes_and_narrows_to_a_config() {
    // The Monte Carlo suite certifies a 0.01 absolute band, which needs the
    // full default ensemble; the config's small trajectory count is
    // overridden accordingly.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "rtn.json", RTN_CONFIG);
    let output = spinbath()
        .args(["verify", config.to_str().unwrap(), "--mc-traj", "100000"])
        .output()
        .unwrap();
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(output.status.success(), "verify failed:\n{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
    assert!(!text.contains("FAIL"));
}

#[test]
fn presets_are_listed_and_fig1a_runs() {
    let output = spinbath().args(["presets", "--list"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    for name in ["fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "perturbative"] {
        assert!(text.contains(name));
    }

    let dir = tempfile::tempdir().unwrap();
    let status = spinbath()
        .args(["presets", "fig1a", "--out-dir", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let thermo = fs::read_to_string(dir.path().join("thermo.csv")).unwrap();
    // p = 0: charging power column is identically zero at every regular row
    // (the t = 0 row is excluded: the Bloch vector starts at the origin).
    let mut rows = 0;
    for line in thermo.lines().skip(5) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[3].abs() < 1e-8, "P must vanish for the maximally mixed start");
        rows += 1;
    }
    assert!(rows >= 499);
    let meta = fs::read_to_string(dir.path().join("thermo.meta.json")).unwrap();
    assert!(meta.contains("\"excluded_t\""));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let status = spinbath().args(["presets", "fig9z"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
