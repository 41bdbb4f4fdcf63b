//! Built-in scenarios reproducing the battery figures: the central-spin
//! charging panels at four mixing probabilities, the telegraph-model power
//! sweep over switching rates, and the exact-versus-perturbative canonical
//! Hamiltonian comparison.

use std::path::Path;

use serde_json::json;
use spinbath::centralspin::{canonical_h_cs, perturbative_h_can, CentralSpinParams};

use crate::config::ScenarioConfig;
use crate::csvout::{config_hash, CsvWriter};
use crate::scenario::run_scenario;
use crate::CliError;

pub const PRESET_NAMES: [&str; 6] =
    ["fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "perturbative"];

fn cs_scenario(mixing_p: f64) -> ScenarioConfig {
    serde_json::from_value(json!({
        "model": "central-spin",
        "params": {"omega0": 1.5, "omega": 1.0, "n_bath": 50, "epsilon": 0.5, "beta": 0.5},
        "initial_state": {"amplitudes": [[0.8660254037844386, 0.0], [0.5, 0.0]], "mixing_p": mixing_p},
        "t_max": 10.0,
        "n_points": 501,
        "outputs": ["thermo", "rates", "state"]
    }))
    .expect("preset config is valid")
}

fn rtn_scenario(gamma: f64) -> ScenarioConfig {
    serde_json::from_value(json!({
        "model": "rtn",
        "params": {"omega0": 1.5, "epsilon": 0.5, "n_bath": 50, "gamma": gamma},
        "initial_state": {"amplitudes": [[0.8660254037844386, 0.0], [0.5, 0.0]], "mixing_p": 1.0},
        "t_max": 10.0,
        "n_points": 501,
        "outputs": ["thermo", "rates", "state"]
    }))
    .expect("preset config is valid")
}

/// Run a named preset. Multi-scenario presets write each run into its own
/// subdirectory. Returns the number of outputs that came back empty.
pub fn run_preset(name: &str, out_dir: &Path) -> Result<usize, CliError> {
    let mut empty = 0usize;
    match name {
        "fig1a" | "fig1b" | "fig1c" | "fig1d" => {
            let mixing = match name {
                "fig1a" => 0.0,
                "fig1b" => 0.05,
                "fig1c" => 0.5,
                _ => 1.0,
            };
            let scenario = cs_scenario(mixing).build()?;
            empty += run_scenario(&scenario, out_dir)?.empty_outputs.len();
        }
        "fig1e" => {
            // Switching-rate sweep; gamma = 10 is overdamped
            // ((b/gamma)^2 = 0.125 < 1) and never charges.
            for gamma in [0.5, 1.0, 2.0, 10.0] {
                let sub = out_dir.join(format!("gamma_{gamma:.2}"));
                let scenario = rtn_scenario(gamma).build()?;
                empty += run_scenario(&scenario, &sub)?.empty_outputs.len();
            }
        }
        "perturbative" => {
            emit_perturbative_comparison(out_dir)?;
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            )));
        }
    }
    Ok(empty)
}

/// Exact vs second-order canonical Hamiltonian, one CSV per coupling.
fn emit_perturbative_comparison(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;
    for epsilon in [0.5, 0.1, 0.05] {
        let p = CentralSpinParams::new(1.5, 1.0, 50, epsilon, 0.5)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let hash = config_hash(&format!("perturbative epsilon={epsilon}"));
        let mut w = CsvWriter::new(
            &hash,
            "exact vs second-order perturbative canonical Hamiltonian",
            &format!(
                "model=central-spin omega0=1.5 omega=1.0 n_bath=50 epsilon={epsilon} beta=0.5"
            ),
            &["t", "h00_exact", "h11_exact", "h00_perturbative", "h11_perturbative"],
        );
        let n = 501;
        for k in 0..n {
            let t = 25.0 * k as f64 / (n - 1) as f64;
            let exact = canonical_h_cs(&p, t).map_err(|e| CliError::Runtime(e.to_string()))?;
            let pert =
                perturbative_h_can(&p, t).map_err(|e| CliError::Runtime(e.to_string()))?;
            w.push_row(&[t, exact[(0, 0)].re, exact[(1, 1)].re, pert[(0, 0)].re, pert[(1, 1)].re]);
        }
        w.write_to(&out_dir.join(format!("canonical_hamiltonian_eps_{epsilon}.csv")))?;
    }
    Ok(())
}

pub fn describe(name: &str) -> &'static str {
    match name {
        "fig1a" => "central spin battery, maximally mixed start (p = 0)",
        "fig1b" => "central spin battery, weakly mixed start (p = 0.05)",
        "fig1c" => "central spin battery, half mixed start (p = 0.5)",
        "fig1d" => "central spin battery, pure start (p = 1)",
        "fig1e" => "telegraph battery power across switching rates",
        "perturbative" => "exact vs perturbative canonical Hamiltonian",
        _ => "",
    }
}
