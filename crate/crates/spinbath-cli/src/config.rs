//! Scenario configuration: one JSON document, unknown keys rejected.
//!
//! Silent typos in physics parameters are the main operator hazard, so every
//! level of the document uses `deny_unknown_fields` and validation errors
//! carry the offending field path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spinbath::centralspin::CentralSpinParams;
use spinbath::matkit::ComplexMatrix;
use spinbath::rtn::RtnParams;
use spinbath::thermo::state_from_amplitudes;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    CentralSpin,
    Rtn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    State,
    Rates,
    Choi,
    Kraus,
    Thermo,
    MasterEqCheck,
}

impl OutputKind {
    pub fn file_stem(&self) -> &'static str {
        match self {
            OutputKind::State => "state",
            OutputKind::Rates => "rates",
            OutputKind::Choi => "choi",
            OutputKind::Kraus => "kraus",
            OutputKind::Thermo => "thermo",
            OutputKind::MasterEqCheck => "master_eq_check",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    /// Pure-state amplitudes as `[[re, im], [re, im]]`; normalized on load.
    pub amplitudes: [[f64; 2]; 2],
    /// Mixing probability toward the maximally mixed state:
    /// `rho0 = p |psi><psi| + (1 - p) I/2`. Defaults to 1 (pure).
    #[serde(default = "default_mixing")]
    pub mixing_p: f64,
}

fn default_mixing() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsParamsConfig {
    pub omega0: f64,
    pub omega: f64,
    pub n_bath: usize,
    pub epsilon: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtnParamsConfig {
    pub omega0: f64,
    pub epsilon: f64,
    pub n_bath: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    /// Model-specific parameter block, dispatched on `model`.
    pub params: serde_json::Value,
    pub initial_state: InitialStateConfig,
    pub t_max: f64,
    pub n_points: usize,
    pub outputs: Vec<OutputKind>,
    /// RNG seed for Monte Carlo cross-checks.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mc_trajectories")]
    pub mc_trajectories: usize,
}

fn default_seed() -> u64 {
    0x5b17_ba7d
}

fn default_mc_trajectories() -> usize {
    100_000
}

/// Fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: ModelParams,
    pub rho0: ComplexMatrix,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ModelParams {
    CentralSpin(CentralSpinParams),
    Rtn(RtnParams),
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config invalid: {e}")))
    }

    /// Validate every field and produce the runnable scenario.
    pub fn build(self) -> Result<Scenario, CliError> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(CliError::Config("t_max: must be positive and finite".into()));
        }
        if self.n_points < 2 {
            return Err(CliError::Config("n_points: must be at least 2".into()));
        }
        if self.outputs.is_empty() {
            return Err(CliError::Config("outputs: at least one output is required".into()));
        }
        if !(0.0..=1.0).contains(&self.initial_state.mixing_p) {
            return Err(CliError::Config(
                "initial_state.mixing_p: must lie in [0, 1]".into(),
            ));
        }
        let amp = |pair: [f64; 2]| Complex64::new(pair[0], pair[1]);
        let rho0 = state_from_amplitudes(
            [amp(self.initial_state.amplitudes[0]), amp(self.initial_state.amplitudes[1])],
            self.initial_state.mixing_p,
        )
        .map_err(|e| CliError::Config(format!("initial_state.amplitudes: {e}")))?;

        let model = match self.model {
            ModelKind::CentralSpin => {
                let p: CsParamsConfig = serde_json::from_value(self.params.clone())
                    .map_err(|e| CliError::Config(format!("params: {e}")))?;
                ModelParams::CentralSpin(
                    CentralSpinParams::new(p.omega0, p.omega, p.n_bath, p.epsilon, p.beta)
                        .map_err(|e| CliError::Config(format!("params: {e}")))?,
                )
            }
            ModelKind::Rtn => {
                let p: RtnParamsConfig = serde_json::from_value(self.params.clone())
                    .map_err(|e| CliError::Config(format!("params: {e}")))?;
                ModelParams::Rtn(
                    RtnParams::new(p.omega0, p.epsilon, p.n_bath, p.gamma)
                        .map_err(|e| CliError::Config(format!("params: {e}")))?,
                )
            }
        };
        let n = self.n_points;
        let t_grid: Vec<f64> =
            (0..n).map(|k| self.t_max * k as f64 / (n - 1) as f64).collect();
        Ok(Scenario { config: self, model, rho0, t_grid })
    }

    /// Canonical serialization: the hash input for reproducibility headers.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
