//! Runtime verification: every oracle cross-check the library rests on, run
//! as a self-test with one pass/fail line per suite.

use num_complex::Complex64;
use spinbath::centralspin::{
    brute_force_state, canonical_h_cs, exact_state, kraus_ops_cs, perturbative_h_can,
    propagate_cs_guarded, rates, CentralSpinParams,
};
use spinbath::matkit::{c, pauli_z, ComplexMatrix};
use spinbath::rtn::{
    dephasing_rate, generator_rtn, lambda_rtn, lambda_zeros, markovianity, monte_carlo_lambda,
    ohmic_ode_lhs, rtn_kraus, RtnParams,
};
use spinbath::thermo::{
    charging_power_cs, charging_power_rtn, heat_current_cs, heat_current_rtn,
    mixed_initial_state,
};
use spinbath::tlsmap::{
    canonical_form, choi_of_generator, pseudo_kraus, validate_generator_structure,
    validate_map_structure, TlsGenerator, TlsMap,
};

use crate::config::{ModelParams, Scenario};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

pub struct VerifyOptions {
    pub seed: u64,
    pub mc_trajectories: usize,
    pub inject_fault: bool,
}

/// Run every suite; an optional scenario narrows the model parameters.
pub fn run_all(scenario: Option<&Scenario>, opts: &VerifyOptions) -> Vec<CheckResult> {
    let cs = scenario
        .and_then(|s| match &s.model {
            ModelParams::CentralSpin(p) => Some(p.clone()),
            _ => None,
        })
        .unwrap_or_else(CentralSpinParams::figure1);
    let rtn = scenario
        .and_then(|s| match &s.model {
            ModelParams::Rtn(p) => Some(p.clone()),
            _ => None,
        })
        .unwrap_or_else(|| RtnParams::figure1e(1.0).expect("valid defaults"));

    vec![
        structural_suite(opts.inject_fault),
        small_bath_suite(&cs),
        triple_consistency_suite(&cs),
        pipeline_suite(&cs, &rtn),
        mc_suite(&rtn, opts.seed, opts.mc_trajectories),
        thermo_suite(&cs, &rtn),
        perturbative_suite(&cs),
        bosonic_suite(),
    ]
}

/// Deterministic xorshift stream for the randomized structural checks.
struct Stream(u64);

impl Stream {
    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn next_c(&mut self) -> Complex64 {
        c(self.next_f64(), self.next_f64())
    }
}

fn structural_suite(inject_fault: bool) -> CheckResult {
    let mut s = Stream(0x0DDB1A5E5BADC0DEu64);
    let mut worst = 0.0_f64;
    let mut failures = 0usize;
    for trial in 0..1000 {
        let map = TlsMap::new(
            s.next_f64(),
            s.next_f64(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
        )
        .expect("finite");
        let mut matrix = map.matrix();
        if inject_fault && trial == 500 {
            matrix[(3, 3)] += c(1e-3, 0.);
        }
        let report = validate_map_structure(&matrix);
        worst = worst.max(report.max_violation);
        if report.max_violation > 1e-10 {
            failures += 1;
        }

        let gen = TlsGenerator::from_elements(
            s.next_f64(),
            s.next_f64(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
            s.next_c(),
        );
        let gr = validate_generator_structure(&gen.matrix());
        worst = worst.max(gr.max_violation);
        let choi = choi_of_generator(&gen);
        worst = worst.max(choi.trace().norm());
        let spectrum = pseudo_kraus(&choi).expect("Hermitian Choi");
        let decomp = canonical_form(&spectrum);
        for (_, l) in &decomp.jumps {
            worst = worst.max(l.trace().norm());
        }
        // vec/devec round trip
        let m = ComplexMatrix::from_fn(2, |_, _| s.next_c());
        let back =
            spinbath::matkit::devec2(&spinbath::matkit::vec2(&m).expect("2x2")).expect("len 4");
        if back != m {
            failures += 1;
        }
        if gr.max_violation > 1e-10 {
            failures += 1;
        }
    }
    check(
        "structural-relations",
        failures == 0 && worst <= 1e-10,
        format!("1000 randomized map/generator cases, worst violation {worst:.2e}"),
    )
}

fn small_bath_suite(template: &CentralSpinParams) -> CheckResult {
    let rho0 = mixed_initial_state(1.0);
    let mut worst = 0.0_f64;
    for n_bath in [1usize, 2, 4, 8] {
        let p = CentralSpinParams::new(
            template.omega0,
            template.omega,
            n_bath,
            template.epsilon,
            template.beta,
        )
        .expect("valid");
        for k in 0..100 {
            let t = 10.0 * k as f64 / 99.0;
            let exact = exact_state(&p, &rho0, t).expect("regular");
            let brute = brute_force_state(&p, &rho0, t).expect("small bath");
            worst = worst.max(exact.max_abs_diff(&brute));
        }
    }
    check(
        "small-bath-brute-force",
        worst <= 1e-9,
        format!("N in {{1,2,4,8}}, 100 points each, worst |exact - brute| = {worst:.2e}"),
    )
}

fn triple_consistency_suite(p: &CentralSpinParams) -> CheckResult {
    let rho0 = mixed_initial_state(1.0);
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
    let mut worst_kraus = 0.0_f64;
    for &t in &grid {
        let exact = exact_state(p, &rho0, t).expect("regular");
        let ops = kraus_ops_cs(p, t).expect("CP channel");
        let mut rebuilt = ComplexMatrix::zeros(2);
        for k in &ops {
            rebuilt = rebuilt.add(&k.mul(&rho0).mul(&k.dagger()));
        }
        worst_kraus = worst_kraus.max(rebuilt.max_abs_diff(&exact));
    }
    let mut worst_ode = 0.0_f64;
    let mut compared = 0usize;
    match propagate_cs_guarded(p, &rho0, &grid, 2000.0, 0.05) {
        Ok(traj) => {
            for (k, state) in traj.states.iter().enumerate() {
                if let Some(rho) = state {
                    let exact = exact_state(p, &rho0, grid[k]).expect("regular");
                    worst_ode = worst_ode.max(rho.max_abs_diff(&exact));
                    compared += 1;
                }
            }
        }
        Err(e) => return check("channel-triple-consistency", false, e.to_string()),
    }
    check(
        "channel-triple-consistency",
        worst_kraus <= 1e-6 && worst_ode <= 1e-6 && compared * 10 >= grid.len() * 9,
        format!(
            "map vs Kraus {worst_kraus:.2e}, map vs ODE {worst_ode:.2e} at {compared}/{} regular points",
            grid.len()
        ),
    )
}

fn pipeline_suite(p: &CentralSpinParams, q: &RtnParams) -> CheckResult {
    let mut worst = 0.0_f64;
    for t in [0.3, 0.45, 0.9, 1.5] {
        let r = match rates(p, t) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let gen = spinbath::centralspin::generator_cs(p, t).expect("regular");
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).expect("Hermitian"));
        worst = worst.max(
            decomp
                .h_can
                .max_abs_diff(&pauli_z().scale_re(-r.theta.im / 2.0)),
        );
        // gain / loss / dephasing rates from the pipeline jumps
        let mut gain = 0.0;
        let mut loss = 0.0;
        let mut dephase = 0.0;
        for (g, l) in &decomp.jumps {
            if l[(0, 1)].norm() > 0.5 {
                gain = *g;
            } else if l[(1, 0)].norm() > 0.5 {
                loss = *g;
            } else {
                dephase += g * l[(0, 0)].norm_sqr();
            }
        }
        worst = worst.max((gain - r.nu_plus).abs());
        worst = worst.max((loss - r.nu_minus).abs());
        worst = worst.max((dephase - r.nu_z).abs());
    }
    for t in [0.1, 0.3, 1.4] {
        let gen = generator_rtn(q, t).expect("regular");
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).expect("Hermitian"));
        worst = worst.max(decomp.h_can.max_abs_diff(&pauli_z().scale_re(q.omega0 / 2.0)));
        let mut dephase = 0.0;
        for (g, l) in &decomp.jumps {
            dephase += g * l[(0, 0)].norm_sqr();
        }
        worst = worst.max((dephase - dephasing_rate(q, t).expect("regular")).abs());
    }
    check(
        "pipeline-fidelity",
        worst <= 1e-8,
        format!("canonical Hamiltonian and rates vs closed forms, worst {worst:.2e}"),
    )
}

fn mc_suite(p: &RtnParams, seed: u64, n_traj: usize) -> CheckResult {
    let grid: Vec<f64> = (1..=50).map(|k| k as f64 * 0.2).collect();
    let est = match monte_carlo_lambda(p, &grid, n_traj, seed) {
        Ok(est) => est,
        Err(e) => return check("mc-vs-analytic", false, e.to_string()),
    };
    let mut outside_3se = 0usize;
    let mut within_abs = 0usize;
    let mut worst = 0.0_f64;
    for (k, &t) in grid.iter().enumerate() {
        let dev = (est.lambda_hat[k] - lambda_rtn(p, t).lambda).abs();
        worst = worst.max(dev);
        if dev > 3.0 * est.stderr[k] {
            outside_3se += 1;
        }
        if dev <= 0.01 {
            within_abs += 1;
        }
    }
    check(
        "mc-vs-analytic",
        outside_3se == 0 && within_abs * 100 >= grid.len() * 95,
        format!(
            "{n_traj} trajectories, worst |MC - analytic| = {worst:.2e}, {within_abs}/{} within 0.01",
            grid.len()
        ),
    )
}

fn thermo_suite(p: &CentralSpinParams, q: &RtnParams) -> CheckResult {
    let rho0 = mixed_initial_state(1.0);
    let h_s = pauli_z().scale_re(p.omega0 / 2.0);
    let mut worst_identity = 0.0_f64;
    let mut worst_first_law = 0.0_f64;
    let mut worst_rtn_heat = 0.0_f64;
    let mut worst_mixed_power = 0.0_f64;
    let step = 1e-5;
    for k in 1..=60 {
        let t = k as f64 * 0.16;
        if let Ok(power) = charging_power_cs(p, &rho0, t) {
            worst_identity = worst_identity
                .max((power.power - power.heat_current - power.passive_heat_current).abs());
            let e = |tt: f64| {
                h_s.mul(&exact_state(p, &rho0, tt).expect("regular")).trace().re
            };
            let fd = (e(t + step) - e(t - step)) / (2.0 * step);
            worst_first_law =
                worst_first_law.max((heat_current_cs(p, &rho0, t).expect("valid") - fd).abs());
        }
        worst_rtn_heat = worst_rtn_heat.max(heat_current_rtn(q, &rho0, t).expect("valid").abs());
        if let Ok(power) = charging_power_cs(p, &mixed_initial_state(0.0), t) {
            worst_mixed_power = worst_mixed_power.max(power.power.abs());
        }
    }
    let overdamped = RtnParams::new(q.omega0, q.epsilon, q.n_bath, 10.0 * q.amplitude())
        .expect("valid");
    let mut max_overdamped_power = f64::NEG_INFINITY;
    for k in 0..=100 {
        let t = k as f64 * 0.1;
        max_overdamped_power = max_overdamped_power
            .max(charging_power_rtn(&overdamped, &rho0, t).expect("valid"));
    }
    let passed = worst_identity <= 1e-8
        && worst_first_law <= 1e-6
        && worst_rtn_heat <= 1e-12
        && worst_mixed_power <= 1e-8
        && max_overdamped_power <= 1e-14;
    check(
        "thermo-identities",
        passed,
        format!(
            "P=J+Jp {worst_identity:.1e}, first law {worst_first_law:.1e}, J_rtn {worst_rtn_heat:.1e}, P(p=0) {worst_mixed_power:.1e}, overdamped max P {max_overdamped_power:.1e}"
        ),
    )
}

fn perturbative_suite(p: &CentralSpinParams) -> CheckResult {
    let gap = |eps: f64| -> f64 {
        let params =
            CentralSpinParams::new(p.omega0, p.omega, p.n_bath, eps, p.beta).expect("valid");
        let mut worst = 0.0_f64;
        for k in 0..=500 {
            let t = 25.0 * k as f64 / 500.0;
            if let (Ok(exact), Ok(pert)) =
                (canonical_h_cs(&params, t), perturbative_h_can(&params, t))
            {
                worst = worst.max(exact.max_abs_diff(&pert));
            }
        }
        worst
    };
    let strong = gap(0.5);
    let mid = gap(0.1);
    let weak = gap(0.05);
    check(
        "perturbative-convergence",
        strong > mid && mid > weak && weak * 10.0 <= strong,
        format!("sup-norm gaps: eps 0.5 -> {strong:.2e}, 0.1 -> {mid:.2e}, 0.05 -> {weak:.2e}"),
    )
}

fn bosonic_suite() -> CheckResult {
    let (a, cutoff) = (0.1, 5.0);
    let mut min_variation = f64::INFINITY;
    for gamma in [0.2, 1.0, 5.0] {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut amax = 0.0_f64;
        for k in 0..=490 {
            let t = 0.1 + k as f64 * 0.01;
            let v = ohmic_ode_lhs(a, cutoff, gamma, t);
            lo = lo.min(v);
            hi = hi.max(v);
            amax = amax.max(v.abs());
        }
        min_variation = min_variation.min((hi - lo) / amax);
    }
    let underdamped = RtnParams::figure1e(1.0).expect("valid");
    let zeros = lambda_zeros(&underdamped, 3.0);
    let mut chi_positive = true;
    for k in 0..=500 {
        if spinbath::rtn::ohmic_dephasing(a, cutoff, k as f64 * 0.01).chi <= 0.0 {
            chi_positive = false;
        }
    }
    let nm = markovianity(&underdamped);
    let kraus_ok = rtn_kraus(&underdamped, zeros.first().copied().unwrap_or(0.5)).is_ok();
    check(
        "bosonic-no-go",
        min_variation > 1e-3 && !zeros.is_empty() && chi_positive && !nm.markovian && kraus_ok,
        format!(
            "Ohmic LHS varies by {:.1}% of max; telegraph factor has {} zero(s) while chi > 0",
            100.0 * min_variation,
            zeros.len()
        ),
    )
}
