//! Acceptance suite: every exit criterion with its stated tolerance, one
//! pass/fail line per criterion (`cargo test --test acceptance`).

use std::time::Instant;

use num_complex::Complex64;
use spinbath::centralspin::{
    brute_force_state, canonical_h_cs, exact_state, generator_cs, kraus_ops_cs,
    perturbative_h_can, propagate_cs_guarded, rates, CentralSpinParams,
};
use spinbath::matkit::{c, devec2, pauli_z, sigma_minus, sigma_plus, vec2, ComplexMatrix};
use spinbath::rtn::{
    dephasing_rate, generator_rtn, lambda_rtn, lambda_zeros, markovianity, monte_carlo_lambda,
    ohmic_dephasing, ohmic_ode_lhs, rtn_kraus, RtnParams,
};
use spinbath::thermo::{
    charging_power_cs, charging_power_rtn, heat_current_cs, heat_current_rtn,
    mixed_initial_state,
};
use spinbath::tlsmap::{
    canonical_form, choi_of_generator, pseudo_kraus, validate_generator_structure,
    validate_map_structure, TlsGenerator, TlsMap,
};

fn fig1() -> CentralSpinParams {
    CentralSpinParams::figure1()
}

fn fig1e() -> RtnParams {
    RtnParams::figure1e(1.0).unwrap()
}

#[test]
fn criterion_1_small_bath_oracle_equivalence() {
    let start = Instant::now();
    let rho0 = mixed_initial_state(1.0);
    let mut worst = 0.0_f64;
    for n_bath in [1usize, 2, 4, 8] {
        let p = CentralSpinParams::new(1.5, 1.0, n_bath, 0.5, 0.5).unwrap();
        for k in 0..100 {
            let t = 10.0 * k as f64 / 99.0;
            let exact = exact_state(&p, &rho0, t).unwrap();
            let brute = brute_force_state(&p, &rho0, t).unwrap();
            worst = worst.max(exact.max_abs_diff(&brute));
        }
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 1: worst |exact - brute force| = {worst:.3e} (tol 1e-9) in {elapsed:.2?}"
    );
    assert!(worst <= 1e-9);
    assert!(elapsed.as_secs() < 60, "runtime target");
}

#[test]
fn criterion_2_channel_triple_consistency() {
    let p = fig1();
    let rho0 = mixed_initial_state(1.0);
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();

    let mut worst_kraus = 0.0_f64;
    for &t in &grid {
        let exact = exact_state(&p, &rho0, t).unwrap();
        let ops = kraus_ops_cs(&p, t).unwrap();
        let mut rebuilt = ComplexMatrix::zeros(2);
        for k in &ops {
            rebuilt = rebuilt.add(&k.mul(&rho0).mul(&k.dagger()));
        }
        worst_kraus = worst_kraus.max(rebuilt.max_abs_diff(&exact));
    }

    // The generator has poles where alpha = eta (six crossings inside
    // [0, 10] at these parameters); the master-equation route integrates the
    // regular segments and re-anchors across excluded windows, and the
    // comparison covers every grid point outside them.
    let traj = propagate_cs_guarded(&p, &rho0, &grid, 2000.0, 0.05).unwrap();
    let mut worst_ode = 0.0_f64;
    let mut compared = 0usize;
    for (k, state) in traj.states.iter().enumerate() {
        if let Some(rho) = state {
            worst_ode = worst_ode.max(rho.max_abs_diff(&exact_state(&p, &rho0, grid[k]).unwrap()));
            compared += 1;
        }
    }
    println!(
        "criterion 2: map vs Kraus {worst_kraus:.3e}, map vs RK4 {worst_ode:.3e} (tol 1e-6) at {compared}/{} points; {} generator poles skipped",
        grid.len(),
        traj.singular_times.len()
    );
    assert!(worst_kraus <= 1e-6);
    assert!(worst_ode <= 1e-6);
    assert!(compared >= 90, "nearly all grid points must be regular");
}

#[test]
fn criterion_3_pipeline_fidelity() {
    let p = fig1();
    let mut worst_cs = 0.0_f64;
    let mut sampled = 0usize;
    for t in [0.2, 0.3, 0.45, 0.9, 1.5, 3.3] {
        let r = match rates(&p, t) {
            Ok(r) => r,
            Err(_) => continue,
        };
        sampled += 1;
        let gen = generator_cs(&p, t).unwrap();
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).unwrap());
        worst_cs = worst_cs
            .max(decomp.h_can.max_abs_diff(&pauli_z().scale_re(-r.theta.im / 2.0)));
        let (mut gain, mut loss, mut dephase) = (f64::NAN, f64::NAN, 0.0);
        for (g, l) in &decomp.jumps {
            if l.max_abs_diff(&sigma_plus()) < 1e-9 {
                gain = *g;
            } else if l.max_abs_diff(&sigma_minus()) < 1e-9 {
                loss = *g;
            } else {
                // remaining pair is proportional to sigma_z
                assert!(l[(0, 1)].norm() < 1e-9 && l[(1, 0)].norm() < 1e-9);
                assert!((l[(0, 0)] + l[(1, 1)]).norm() < 1e-9);
                dephase += g * l[(0, 0)].norm_sqr();
            }
        }
        worst_cs = worst_cs.max((gain - r.nu_plus).abs());
        worst_cs = worst_cs.max((loss - r.nu_minus).abs());
        worst_cs = worst_cs.max((dephase - r.nu_z).abs());
    }
    assert!(sampled >= 5);

    let q = fig1e();
    let mut worst_rtn = 0.0_f64;
    for t in [0.1, 0.3, 0.8, 1.4, 2.9] {
        let gen = generator_rtn(&q, t).unwrap();
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).unwrap());
        worst_rtn =
            worst_rtn.max(decomp.h_can.max_abs_diff(&pauli_z().scale_re(q.omega0 / 2.0)));
        let mut dephase = 0.0;
        for (g, l) in &decomp.jumps {
            dephase += g * l[(0, 0)].norm_sqr();
        }
        worst_rtn = worst_rtn.max((dephase - dephasing_rate(&q, t).unwrap()).abs());
    }
    println!(
        "criterion 3: central-spin pipeline worst {worst_cs:.3e}, telegraph pipeline worst {worst_rtn:.3e} (tol 1e-8)"
    );
    assert!(worst_cs <= 1e-8);
    assert!(worst_rtn <= 1e-8);
}

#[test]
fn criterion_4_rtn_monte_carlo_vs_analytic() {
    let start = Instant::now();
    let q = fig1e();
    let verdict = markovianity(&q);
    assert!(!verdict.markovian && (verdict.ratio - 12.5).abs() < 1e-12);
    let grid: Vec<f64> = (1..=50).map(|k| k as f64 * 0.2).collect();
    let est = monte_carlo_lambda(&q, &grid, 100_000, 0x5b17_ba7d).unwrap();
    let mut worst = 0.0_f64;
    let mut within_abs = 0usize;
    for (k, &t) in grid.iter().enumerate() {
        let dev = (est.lambda_hat[k] - lambda_rtn(&q, t).lambda).abs();
        worst = worst.max(dev);
        assert!(
            dev <= 3.0 * est.stderr[k],
            "t = {t}: deviation {dev:.3e} beyond 3 standard errors {:.3e}",
            est.stderr[k]
        );
        if dev <= 0.01 {
            within_abs += 1;
        }
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 4: worst |MC - analytic| = {worst:.3e}, {within_abs}/50 within 0.01, in {elapsed:.2?}"
    );
    assert!(within_abs * 100 >= grid.len() * 95);
    assert!(elapsed.as_secs() < 30, "runtime target");
}

#[test]
fn criterion_5_thermodynamics_identities() {
    let p = fig1();
    let q = fig1e();
    let pure = mixed_initial_state(1.0);
    let mixed = mixed_initial_state(0.0);
    let h_s = pauli_z().scale_re(p.omega0 / 2.0);
    let step = 1e-5;
    let mut worst_split = 0.0_f64;
    let mut worst_first_law = 0.0_f64;
    let mut worst_rtn_heat = 0.0_f64;
    let mut worst_mixed_power = 0.0_f64;
    for k in 1..=100 {
        let t = k as f64 * 0.1;
        let power = charging_power_cs(&p, &pure, t).unwrap();
        worst_split = worst_split
            .max((power.power - power.heat_current - power.passive_heat_current).abs());
        let e = |tt: f64| h_s.mul(&exact_state(&p, &pure, tt).unwrap()).trace().re;
        let fd = (e(t + step) - e(t - step)) / (2.0 * step);
        worst_first_law =
            worst_first_law.max((heat_current_cs(&p, &pure, t).unwrap() - fd).abs());
        worst_rtn_heat = worst_rtn_heat.max(heat_current_rtn(&q, &pure, t).unwrap().abs());
        worst_mixed_power =
            worst_mixed_power.max(charging_power_cs(&p, &mixed, t).unwrap().power.abs());
    }
    let overdamped = RtnParams::new(q.omega0, q.epsilon, q.n_bath, 10.0 * q.amplitude()).unwrap();
    assert!(markovianity(&overdamped).markovian);
    let mut max_overdamped = f64::NEG_INFINITY;
    for k in 0..=200 {
        let t = k as f64 * 0.05;
        max_overdamped = max_overdamped.max(charging_power_rtn(&overdamped, &pure, t).unwrap());
    }
    println!(
        "criterion 5: P=J+Jp {worst_split:.2e} (tol 1e-8), first law {worst_first_law:.2e} (tol 1e-6), J_rtn {worst_rtn_heat:.2e} (tol 1e-12), P(p=0) {worst_mixed_power:.2e} (tol 1e-8), overdamped max P {max_overdamped:.2e} (<= 0)"
    );
    assert!(worst_split <= 1e-8);
    assert!(worst_first_law <= 1e-6);
    assert!(worst_rtn_heat <= 1e-12);
    assert!(worst_mixed_power <= 1e-8);
    assert!(max_overdamped <= 0.0);
}

#[test]
fn criterion_6_perturbative_convergence() {
    let gap = |eps: f64| -> f64 {
        let p = CentralSpinParams::new(1.5, 1.0, 50, eps, 0.5).unwrap();
        let mut worst = 0.0_f64;
        for k in 0..=500 {
            let t = 25.0 * k as f64 / 500.0;
            if let (Ok(exact), Ok(pert)) = (canonical_h_cs(&p, t), perturbative_h_can(&p, t)) {
                worst = worst.max(exact.max_abs_diff(&pert));
            }
        }
        worst
    };
    let strong = gap(0.5);
    let mid = gap(0.1);
    let weak = gap(0.05);
    println!(
        "criterion 6: sup-norm gaps eps 0.5 -> {strong:.3e}, 0.1 -> {mid:.3e}, 0.05 -> {weak:.3e} (monotone, 10x)"
    );
    assert!(strong > mid && mid > weak, "gap must shrink with coupling");
    assert!(weak <= strong / 10.0);
}

#[test]
fn criterion_7_bosonic_no_go_witness() {
    let (a, cutoff) = (0.1, 5.0);
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
        assert!(
            hi - lo > 1e-3 * amax,
            "gamma = {gamma}: the Ohmic left-hand side must not be constant"
        );
    }
    let q = fig1e();
    let zeros = lambda_zeros(&q, 10.0);
    assert!(!zeros.is_empty(), "underdamped telegraph factor must cross zero");
    for k in 0..=1000 {
        assert!(ohmic_dephasing(a, cutoff, k as f64 * 0.01).chi > 0.0);
    }
    println!(
        "criterion 7: Ohmic LHS non-constant for all sampled gamma; Lambda zeros at {:?} while chi stays positive",
        &zeros[..zeros.len().min(3)]
    );
}

#[test]
fn criterion_8_structural_property_suites() {
    // Deterministic xorshift stream keeps the 1000 cases reproducible.
    fn next(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
    fn next_c(state: &mut u64) -> Complex64 {
        Complex64::new(next(state), next(state))
    }
    let mut s = 0x9E3779B97F4A7C15u64;
    let mut failures = 0usize;
    let p = fig1();
    let q = fig1e();
    for trial in 0..1000 {
        let map = TlsMap::new(
            next(&mut s),
            next(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
        )
        .unwrap();
        if validate_map_structure(&map.matrix()).max_violation > 1e-10 {
            failures += 1;
        }
        let gen = TlsGenerator::from_elements(
            next(&mut s),
            next(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
            next_c(&mut s),
        );
        if validate_generator_structure(&gen.matrix()).max_violation > 1e-10 {
            failures += 1;
        }
        let choi = choi_of_generator(&gen);
        if choi.trace().norm() > 1e-10 {
            failures += 1;
        }
        let decomp = canonical_form(&pseudo_kraus(&choi).unwrap());
        if decomp.jumps.iter().any(|(_, l)| l.trace().norm() > 1e-10) {
            failures += 1;
        }
        let m = ComplexMatrix::from_fn(2, |_, _| next_c(&mut s));
        if devec2(&vec2(&m).unwrap()).unwrap() != m {
            failures += 1;
        }
        // Kraus completeness at a pseudo-random time for both channels.
        let t = 5.0 * (next(&mut s) + 1.0) / 2.0;
        let id = ComplexMatrix::identity(2);
        let ops = kraus_ops_cs(&p, t).unwrap();
        let mut complete = ComplexMatrix::zeros(2);
        for k in &ops {
            complete = complete.add(&k.dagger().mul(k));
        }
        if complete.max_abs_diff(&id) > 1e-10 {
            failures += 1;
        }
        let (k1, k2) = rtn_kraus(&q, t).unwrap();
        if k1.dagger().mul(&k1).add(&k2.dagger().mul(&k2)).max_abs_diff(&id) > 1e-12 {
            failures += 1;
        }
        if trial == 0 {
            // spot-check the Choi block signs once
            assert_eq!(choi[(2, 2)], c(-gen.l11, 0.));
        }
    }
    println!("criterion 8: 1000 randomized structural cases, {failures} failures");
    assert_eq!(failures, 0);
}
