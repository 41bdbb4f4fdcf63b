//! Execute a scenario: evaluate the requested observables over the time grid
//! and emit one CSV per output, with singular grid points skipped and listed
//! in a sidecar metadata file.

use std::path::{Path, PathBuf};

use spinbath::centralspin::{
    self, choi_spectrum_cs, exact_state, kraus_ops_cs, master_equation_cs, propagate_cs_guarded,
    rates, CentralSpinParams,
};
use spinbath::matkit::ComplexMatrix;
use spinbath::rtn::{
    self, dephasing_rate, generator_rtn, lambda_rtn, master_equation_rtn, propagate_rtn_guarded,
    rtn_kraus, rtn_state, RtnParams,
};
use spinbath::thermo::{sample_cs, sample_rtn};

use crate::config::{ModelParams, OutputKind, Scenario};
use crate::csvout::{config_hash, write_sidecar, CsvWriter};
use crate::CliError;

/// Substep density (per unit time) and exclusion half-width used by the
/// master-equation consistency output.
const ODE_SUBSTEPS_PER_UNIT_TIME: f64 = 2000.0;
const SINGULAR_WINDOW: f64 = 0.05;

pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Outputs that ended with zero data rows because every grid point was
    /// singular.
    pub empty_outputs: Vec<OutputKind>,
}

pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let canonical = scenario.config.canonical_json();
    let hash = config_hash(&canonical);
    std::fs::write(out_dir.join("scenario.json"), canonical + "\n")
        .map_err(|e| CliError::Io(format!("writing scenario.json: {e}")))?;

    let mut report = RunReport { files: vec![out_dir.join("scenario.json")], empty_outputs: vec![] };
    for output in &scenario.config.outputs {
        let (writer, excluded, singular) = match (&scenario.model, output) {
            (ModelParams::CentralSpin(p), OutputKind::State) => cs_state(scenario, p, &hash)?,
            (ModelParams::CentralSpin(p), OutputKind::Rates) => cs_rates(scenario, p, &hash)?,
            (ModelParams::CentralSpin(p), OutputKind::Choi) => cs_choi(scenario, p, &hash)?,
            (ModelParams::CentralSpin(p), OutputKind::Kraus) => cs_kraus(scenario, p, &hash)?,
            (ModelParams::CentralSpin(p), OutputKind::Thermo) => cs_thermo(scenario, p, &hash)?,
            (ModelParams::CentralSpin(p), OutputKind::MasterEqCheck) => {
                cs_master_check(scenario, p, &hash)?
            }
            (ModelParams::Rtn(p), OutputKind::State) => rtn_state_csv(scenario, p, &hash)?,
            (ModelParams::Rtn(p), OutputKind::Rates) => rtn_rates_csv(scenario, p, &hash)?,
            (ModelParams::Rtn(p), OutputKind::Choi) => rtn_choi_csv(scenario, p, &hash)?,
            (ModelParams::Rtn(p), OutputKind::Kraus) => rtn_kraus_csv(scenario, p, &hash)?,
            (ModelParams::Rtn(p), OutputKind::Thermo) => rtn_thermo_csv(scenario, p, &hash)?,
            (ModelParams::Rtn(p), OutputKind::MasterEqCheck) => {
                rtn_master_check(scenario, p, &hash)?
            }
        };
        let path = out_dir.join(format!("{}.csv", output.file_stem()));
        writer.write_to(&path)?;
        if !excluded.is_empty() || !singular.is_empty() {
            let meta = out_dir.join(format!("{}.meta.json", output.file_stem()));
            write_sidecar(
                &meta,
                &hash,
                &singular,
                &excluded,
                "grid points excluded around generator singularities",
            )?;
            report.files.push(meta);
        }
        if writer.data_rows() == 0 {
            report.empty_outputs.push(*output);
        }
        report.files.push(path);
    }
    Ok(report)
}

type OutputData = (CsvWriter, Vec<f64>, Vec<f64>);

fn params_line_cs(p: &CentralSpinParams) -> String {
    format!(
        "model=central-spin omega0={} omega={} n_bath={} epsilon={} beta={}",
        p.omega0, p.omega, p.n_bath, p.epsilon, p.beta
    )
}

fn params_line_rtn(p: &RtnParams) -> String {
    format!(
        "model=rtn omega0={} epsilon={} n_bath={} gamma={} ratio={}",
        p.omega0, p.epsilon, p.n_bath, p.gamma,
        p.ratio()
    )
}

fn state_columns() -> [&'static str; 5] {
    ["t", "rho00", "rho01_re", "rho01_im", "rho11"]
}

fn push_state_row(w: &mut CsvWriter, t: f64, rho: &ComplexMatrix) {
    w.push_row(&[t, rho[(0, 0)].re, rho[(0, 1)].re, rho[(0, 1)].im, rho[(1, 1)].re]);
}

fn cs_state(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(hash, "reduced state of the central spin", &params_line_cs(p), &state_columns());
    for &t in &s.t_grid {
        let rho = exact_state(p, &s.rho0, t).map_err(model_err)?;
        push_state_row(&mut w, t, &rho);
    }
    Ok((w, vec![], vec![]))
}

fn cs_rates(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "canonical rates of the central-spin master equation",
        &params_line_cs(p),
        &["t", "zeta", "Gamma", "theta_re", "theta_im", "nu_plus", "nu_minus", "nu_z"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        match rates(p, t) {
            Ok(r) => w.push_row(&[
                t, r.zeta, r.gamma, r.theta.re, r.theta.im, r.nu_plus, r.nu_minus, r.nu_z,
            ]),
            Err(_) => excluded.push(t),
        }
    }
    let singular = centralspin::singular_times(p, *s.t_grid.last().unwrap());
    Ok((w, excluded, singular))
}

fn cs_choi(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "Choi eigenvalues of the central-spin generator (descending)",
        &params_line_cs(p),
        &["t", "gamma_1", "gamma_2", "gamma_3", "gamma_4"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        match choi_spectrum_cs(p, t) {
            Ok(spec) => {
                let g: Vec<f64> = spec.pairs.iter().map(|(g, _)| *g).collect();
                w.push_row(&[t, g[0], g[1], g[2], g[3]]);
            }
            Err(_) => excluded.push(t),
        }
    }
    let singular = centralspin::singular_times(p, *s.t_grid.last().unwrap());
    Ok((w, excluded, singular))
}

fn kraus_columns(n_ops: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "completeness_residual".to_string()];
    for j in 1..=n_ops {
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            cols.push(format!("k{j}_{a}{b}_re"));
            cols.push(format!("k{j}_{a}{b}_im"));
        }
    }
    cols
}

fn kraus_row(t: f64, ops: &[ComplexMatrix]) -> Vec<f64> {
    let mut complete = ComplexMatrix::zeros(2);
    for k in ops {
        complete = complete.add(&k.dagger().mul(k));
    }
    let residual = complete.max_abs_diff(&ComplexMatrix::identity(2));
    let mut row = vec![t, residual];
    for k in ops {
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(k[(a, b)].re);
            row.push(k[(a, b)].im);
        }
    }
    row
}

fn cs_kraus(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let cols = kraus_columns(4);
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(hash, "Kraus operators of the exact channel", &params_line_cs(p), &col_refs);
    for &t in &s.t_grid {
        let ops = kraus_ops_cs(p, t).map_err(model_err)?;
        w.push_row(&kraus_row(t, &ops));
    }
    Ok((w, vec![], vec![]))
}

fn cs_thermo(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "battery observables of the dissipative central spin",
        &params_line_cs(p),
        &["t", "J", "J_passive", "P", "W", "x", "y", "z"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        match sample_cs(p, &s.rho0, t) {
            Ok(sample) => w.push_row(&[
                t,
                sample.heat_current,
                sample.passive_heat_current,
                sample.charging_power,
                sample.ergotropy,
                sample.bloch.0,
                sample.bloch.1,
                sample.bloch.2,
            ]),
            Err(_) => excluded.push(t),
        }
    }
    Ok((w, excluded, vec![]))
}

fn cs_master_check(s: &Scenario, p: &CentralSpinParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "master-equation consistency: |RHS - d/dt exact| and |ODE - map|",
        &params_line_cs(p),
        &["t", "rhs_vs_fd", "ode_vs_map"],
    );
    let mut excluded = Vec::new();
    let guarded = propagate_cs_guarded(
        p,
        &s.rho0,
        &s.t_grid,
        ODE_SUBSTEPS_PER_UNIT_TIME,
        SINGULAR_WINDOW,
    )
    .map_err(model_err)?;
    let h = 1e-5;
    for (k, &t) in s.t_grid.iter().enumerate() {
        let ode = match &guarded.states[k] {
            Some(state) => state,
            None => {
                excluded.push(t);
                continue;
            }
        };
        let rho_t = exact_state(p, &s.rho0, t).map_err(model_err)?;
        let rhs_vs_fd = match master_equation_cs(p, t, &rho_t) {
            Ok(rhs) => {
                let tm = (t - h).max(0.0);
                let fd = exact_state(p, &s.rho0, t + h)
                    .map_err(model_err)?
                    .sub(&exact_state(p, &s.rho0, tm).map_err(model_err)?)
                    .scale_re(1.0 / (t + h - tm));
                rhs.max_abs_diff(&fd)
            }
            Err(_) => {
                excluded.push(t);
                continue;
            }
        };
        w.push_row(&[t, rhs_vs_fd, ode.max_abs_diff(&rho_t)]);
    }
    Ok((w, excluded, guarded.singular_times))
}

fn rtn_state_csv(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(hash, "reduced state under telegraph dephasing", &params_line_rtn(p), &state_columns());
    for &t in &s.t_grid {
        let rho = rtn_state(p, &s.rho0, t).map_err(model_err)?;
        push_state_row(&mut w, t, &rho);
    }
    Ok((w, vec![], vec![]))
}

fn rtn_rates_csv(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "dephasing factor and canonical rate of the telegraph model",
        &params_line_rtn(p),
        &["t", "lambda", "lambda_dot", "dephasing_rate"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        let f = lambda_rtn(p, t);
        match dephasing_rate(p, t) {
            Ok(rate) => w.push_row(&[t, f.lambda, f.lambda_dot, rate]),
            Err(_) => excluded.push(t),
        }
    }
    let singular = rtn::lambda_zeros(p, *s.t_grid.last().unwrap());
    Ok((w, excluded, singular))
}

fn rtn_choi_csv(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "Choi eigenvalues of the telegraph generator (descending)",
        &params_line_rtn(p),
        &["t", "gamma_1", "gamma_2", "gamma_3", "gamma_4"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        match generator_rtn(p, t) {
            Ok(gen) => {
                let r = gen.l22.norm();
                w.push_row(&[t, r, 0.0, 0.0, -r]);
            }
            Err(_) => excluded.push(t),
        }
    }
    let singular = rtn::lambda_zeros(p, *s.t_grid.last().unwrap());
    Ok((w, excluded, singular))
}

fn rtn_kraus_csv(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let cols = kraus_columns(2);
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut w = CsvWriter::new(hash, "Kraus operators of the telegraph channel", &params_line_rtn(p), &col_refs);
    for &t in &s.t_grid {
        let (k1, k2) = rtn_kraus(p, t).map_err(model_err)?;
        w.push_row(&kraus_row(t, &[k1, k2]));
    }
    Ok((w, vec![], vec![]))
}

fn rtn_thermo_csv(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "battery observables of the telegraph model",
        &params_line_rtn(p),
        &["t", "J", "J_passive", "P", "W", "x", "y", "z"],
    );
    let mut excluded = Vec::new();
    for &t in &s.t_grid {
        match sample_rtn(p, &s.rho0, t) {
            Ok(sample) => w.push_row(&[
                t,
                sample.heat_current,
                sample.passive_heat_current,
                sample.charging_power,
                sample.ergotropy,
                sample.bloch.0,
                sample.bloch.1,
                sample.bloch.2,
            ]),
            Err(_) => excluded.push(t),
        }
    }
    Ok((w, excluded, vec![]))
}

fn rtn_master_check(s: &Scenario, p: &RtnParams, hash: &str) -> Result<OutputData, CliError> {
    let mut w = CsvWriter::new(
        hash,
        "master-equation consistency: |RHS - d/dt exact| and |ODE - map|",
        &params_line_rtn(p),
        &["t", "rhs_vs_fd", "ode_vs_map"],
    );
    let mut excluded = Vec::new();
    let guarded = propagate_rtn_guarded(
        p,
        &s.rho0,
        &s.t_grid,
        ODE_SUBSTEPS_PER_UNIT_TIME,
        SINGULAR_WINDOW,
    )
    .map_err(model_err)?;
    let h = 1e-6;
    for (k, &t) in s.t_grid.iter().enumerate() {
        let ode = match &guarded.states[k] {
            Some(state) => state,
            None => {
                excluded.push(t);
                continue;
            }
        };
        let rho_t = rtn_state(p, &s.rho0, t).map_err(model_err)?;
        let rhs_vs_fd = match master_equation_rtn(p, t, &rho_t) {
            Ok(rhs) => {
                let tm = (t - h).max(0.0);
                let fd = rtn_state(p, &s.rho0, t + h)
                    .map_err(model_err)?
                    .sub(&rtn_state(p, &s.rho0, tm).map_err(model_err)?)
                    .scale_re(1.0 / (t + h - tm));
                rhs.max_abs_diff(&fd)
            }
            Err(_) => {
                excluded.push(t);
                continue;
            }
        };
        w.push_row(&[t, rhs_vs_fd, ode.max_abs_diff(&rho_t)]);
    }
    Ok((w, excluded, guarded.singular_times))
}

fn model_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}
