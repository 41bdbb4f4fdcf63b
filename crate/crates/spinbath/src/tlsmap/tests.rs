use super::*;
use crate::matkit::{kron, pauli_x, pauli_z, sigma_minus};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(r: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c(r.random_range(-scale..scale), r.random_range(-scale..scale))
}

fn random_map(r: &mut ChaCha8Rng) -> TlsMap {
    let phi11 = r.random_range(-1.0..1.0);
    let phi44 = r.random_range(-1.0..1.0);
    let phi12 = random_complex(r, 0.5);
    let phi21 = random_complex(r, 0.5);
    let phi22 = random_complex(r, 1.0);
    let phi23 = random_complex(r, 0.5);
    let phi24 = random_complex(r, 0.5);
    TlsMap::new(phi11, phi44, phi12, phi21, phi22, phi23, phi24).unwrap()
}

fn random_generator(r: &mut ChaCha8Rng) -> TlsGenerator {
    let l11 = r.random_range(-1.0..1.0);
    let l14 = r.random_range(-1.0..1.0);
    let l12 = random_complex(r, 1.0);
    let l21 = random_complex(r, 1.0);
    let l22 = random_complex(r, 1.0);
    let l23 = random_complex(r, 1.0);
    let l24 = random_complex(r, 1.0);
    TlsGenerator::from_elements(l11, l14, l12, l21, l22, l23, l24)
}

fn random_density(r: &mut ChaCha8Rng) -> ComplexMatrix {
    let m = ComplexMatrix::from_fn(2, |_, _| {
        c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    });
    let g = m.mul(&m.dagger()).add(&ComplexMatrix::identity(2).scale_re(1e-3));
    let tr = g.trace().re;
    g.scale_re(1.0 / tr)
}

fn plus_state() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(0.5, 0.), c(0.5, 0.), c(0.5, 0.), c(0.5, 0.)]).unwrap()
}

const OP_BASIS: [[Complex64; 4]; 4] = {
    let one = Complex64 { re: 1.0, im: 0.0 };
    let zero = Complex64 { re: 0.0, im: 0.0 };
    [
        [one, zero, zero, zero],
        [zero, one, zero, zero],
        [zero, zero, one, zero],
        [zero, zero, zero, one],
    ]
};

fn op_basis() -> Vec<ComplexMatrix> {
    OP_BASIS.iter().map(|v| devec2(v).unwrap()).collect()
}

#[test]
fn identity_map_assembles_to_identity_superoperator() {
    let m = TlsMap::identity().matrix();
    assert!(m.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
}

#[test]
fn rtn_shaped_map_is_diagonal() {
    let omega0 = 1.5;
    let t = 0.7;
    let lam = 0.4;
    let delta = c(lam, 0.) * c(0., -omega0 * t).exp();
    let m = TlsMap::phase_covariant(1.0, 0.0, delta).matrix();
    let mut expect = ComplexMatrix::identity(4);
    expect[(1, 1)] = delta;
    expect[(2, 2)] = delta.conj();
    assert!(m.max_abs_diff(&expect) < 1e-15);
}

#[test]
fn phase_covariant_map_at_initial_time_is_identity() {
    let m = TlsMap::phase_covariant(1.0, 0.0, c(1., 0.)).matrix();
    assert!(m.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
}

#[test]
fn map_rejects_non_finite_parameters() {
    assert!(TlsMap::new(f64::NAN, 1.0, c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.))
        .is_err());
}

#[test]
fn apply_identity_preserves_state() {
    let mut r = rng(3);
    for _ in 0..20 {
        let rho = random_density(&mut r);
        assert!(TlsMap::identity().apply(&rho).unwrap().max_abs_diff(&rho) < 1e-14);
    }
}

#[test]
fn apply_rtn_map_to_plus_state() {
    let omega0 = 1.5;
    let t = 0.9;
    let lam = 0.6;
    let delta = c(lam, 0.) * c(0., -omega0 * t).exp();
    let out = TlsMap::phase_covariant(1.0, 0.0, delta).apply(&plus_state()).unwrap();
    assert!((out[(0, 0)] - c(0.5, 0.)).norm() < 1e-14);
    assert!((out[(1, 1)] - c(0.5, 0.)).norm() < 1e-14);
    assert!((out[(0, 1)] - delta.scale(0.5)).norm() < 1e-14);
}

#[test]
fn apply_rejects_invalid_density() {
    let not_unit_trace = ComplexMatrix::identity(2);
    assert!(matches!(
        TlsMap::identity().apply(&not_unit_trace),
        Err(MapError::InvalidDensity { .. })
    ));
    let negative = ComplexMatrix::from_rows(
        2,
        &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)],
    )
    .unwrap();
    assert!(TlsMap::identity().apply(&negative).is_err());
}

#[test]
fn map_preserves_trace_and_hermiticity_for_random_states() {
    let mut r = rng(5);
    for _ in 0..1000 {
        let map = random_map(&mut r);
        let rho = random_density(&mut r);
        let out = map.apply(&rho).unwrap();
        assert!((out.trace() - c(1., 0.)).norm() < 1e-12);
        assert!(out.is_hermitian(1e-12));
    }
}

struct ConstantFamily(TlsMap);

impl MapFamily for ConstantFamily {
    fn map_at(&self, _t: f64) -> TlsMap {
        self.0.clone()
    }
    fn derivative_at(&self, _t: f64) -> Option<ComplexMatrix> {
        Some(ComplexMatrix::zeros(4))
    }
}

/// rho -> e^{-i w sz t / 2} rho e^{i w sz t / 2}.
struct FreeRotation {
    omega: f64,
}

impl MapFamily for FreeRotation {
    fn map_at(&self, t: f64) -> TlsMap {
        TlsMap::phase_covariant(1.0, 0.0, c(0., -self.omega * t).exp())
    }
}

#[test]
fn constant_identity_family_has_zero_generator() {
    let family = ConstantFamily(TlsMap::identity());
    for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference { step: None }] {
        let gen = generator_from_map(&family, 0.8, mode).unwrap();
        assert!(gen.matrix().max_abs() < 1e-9);
    }
}

#[test]
fn finite_difference_matches_analytic_free_rotation() {
    // Oracle: d/dt e^{-i w t} = -i w e^{-i w t}, so l22 = -i w exactly.
    let omega = 1.5;
    let family = FreeRotation { omega };
    for t in [0.0, 0.3, 1.7] {
        let gen =
            generator_from_map(&family, t, DerivativeMode::FiniteDifference { step: None })
                .unwrap();
        assert!((gen.l22 - c(0., -omega)).norm() < 1e-7, "t = {t}");
        assert!(gen.l11.abs() < 1e-7);
        assert!(gen.l14.abs() < 1e-7);
        assert!(gen.l12.norm() + gen.l21.norm() + gen.l23.norm() + gen.l24.norm() < 1e-7);
    }
}

#[test]
fn singular_map_is_reported() {
    let family = ConstantFamily(TlsMap::phase_covariant(1.0, 0.0, c(0., 0.)));
    assert!(matches!(
        generator_from_map(&family, 1.0, DerivativeMode::Analytic),
        Err(MapError::SingularMap { .. })
    ));
}

#[test]
fn structure_validator_flags_broken_last_row() {
    let zero = ComplexMatrix::zeros(4);
    assert_eq!(validate_generator_structure(&zero).max_violation, 0.0);

    let mut bad = TlsGenerator::from_elements(
        0.3,
        0.0,
        c(0., 0.),
        c(0., 0.),
        c(0., 0.),
        c(0., 0.),
        c(0., 0.),
    )
    .matrix();
    bad[(3, 0)] = c(0.3, 0.); // l41 = +l11 != 0
    let report = validate_generator_structure(&bad);
    assert!(report.max_violation > 0.5);
    assert!(report
        .violations
        .iter()
        .any(|(name, v)| name == "l41 = -l11" && *v > 0.5));
    assert!(TlsGenerator::from_matrix(&bad, 1e-9).is_err());
}

#[test]
fn choi_of_zero_generator_is_zero() {
    assert!(choi_of_generator(&TlsGenerator::zero()).max_abs() == 0.0);
}

#[test]
fn choi_block_form() {
    let mut r = rng(7);
    for _ in 0..50 {
        let gen = random_generator(&mut r);
        let choi = choi_of_generator(&gen);
        assert!(choi.is_hermitian(1e-12));
        assert!(choi.trace().norm() < 1e-12);
        // A block
        assert_eq!(choi[(0, 0)], c(gen.l11, 0.));
        assert_eq!(choi[(0, 1)], gen.l12);
        assert_eq!(choi[(1, 1)], c(gen.l14, 0.));
        // B block
        assert_eq!(choi[(0, 2)], gen.l21);
        assert_eq!(choi[(0, 3)], gen.l22);
        assert_eq!(choi[(1, 2)], gen.l23);
        assert_eq!(choi[(1, 3)], gen.l24);
        // -A block
        assert_eq!(choi[(2, 2)], c(-gen.l11, 0.));
        assert_eq!(choi[(3, 3)], c(-gen.l14, 0.));
    }
}

#[test]
fn dephasing_generator_choi_spectrum() {
    let l22 = c(-0.3, -1.5);
    let gen = TlsGenerator::from_elements(0., 0., c(0., 0.), c(0., 0.), l22, c(0., 0.), c(0., 0.));
    let spectrum = pseudo_kraus(&choi_of_generator(&gen)).unwrap();
    let rates: Vec<f64> = spectrum.pairs.iter().map(|(g, _)| *g).collect();
    let r = l22.norm();
    assert!((rates[0] - r).abs() < 1e-12);
    assert!(rates[1].abs() < 1e-12);
    assert!(rates[2].abs() < 1e-12);
    assert!((rates[3] + r).abs() < 1e-12);
    // E for +|l22| is diag(u, 1)/sqrt(2) with u = l22/|l22|, up to the global
    // eigenvector phase convention; compare modulus and the diagonal ratio.
    let e_plus = &spectrum.pairs[0].1;
    let u = l22 / r;
    assert!((e_plus[(0, 0)] / e_plus[(1, 1)] - u).norm() < 1e-12);
    assert!((e_plus[(0, 0)].norm() - 0.5_f64.sqrt()).abs() < 1e-12);
    assert!(e_plus[(0, 1)].norm() < 1e-12 && e_plus[(1, 0)].norm() < 1e-12);
}

#[test]
fn pseudo_kraus_of_zero_choi() {
    let spectrum = pseudo_kraus(&ComplexMatrix::zeros(4)).unwrap();
    assert!(spectrum.pairs.iter().all(|(g, _)| *g == 0.0));
}

#[test]
fn pseudo_kraus_reconstructs_random_generators() {
    let mut r = rng(11);
    for _ in 0..200 {
        let gen = random_generator(&mut r);
        let spectrum = pseudo_kraus(&choi_of_generator(&gen)).unwrap();
        for e in op_basis() {
            let direct = gen.apply(&e);
            let rebuilt = spectrum.apply(&e);
            assert!(direct.max_abs_diff(&rebuilt) < 1e-9);
        }
        assert!(spectrum.max_cross_overlap() < 1e-9);
        for (_, e) in &spectrum.pairs {
            assert!((e.frobenius_norm() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn canonical_form_of_unitary_generator_recovers_hamiltonian() {
    // rho -> -i [H, rho] with traceless Hermitian H; the superoperator in the
    // row-major vec convention is -i (H (x) I - I (x) H^T).
    let mut r = rng(13);
    for _ in 0..100 {
        let hx = r.random_range(-1.0..1.0);
        let hy = r.random_range(-1.0..1.0);
        let hz = r.random_range(-1.0..1.0);
        let h = pauli_x()
            .scale_re(hx)
            .add(&crate::matkit::pauli_y().scale_re(hy))
            .add(&pauli_z().scale_re(hz));
        let id = ComplexMatrix::identity(2);
        let ht = ComplexMatrix::from_fn(2, |i, j| h[(j, i)]);
        let superop = kron(&h, &id).sub(&kron(&id, &ht)).scale(c(0., -1.));
        let gen = TlsGenerator::from_matrix(&superop, 1e-10).unwrap();
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).unwrap());
        assert!(decomp.h_can.max_abs_diff(&h) < 1e-9);
        // The Choi eigenvalues of a commutator generator come in +/- pairs
        // whose jump contributions cancel: the net dissipator vanishes even
        // though individual L_k need not.
        let signed_weight: f64 = decomp
            .jumps
            .iter()
            .map(|(gamma, l)| gamma * l.frobenius_norm().powi(2))
            .sum();
        assert!(signed_weight.abs() <= 1e-10);
        for e in op_basis() {
            let unitary_only = h.commutator(&e).scale(c(0., -1.));
            assert!(decomp.apply(&e).max_abs_diff(&unitary_only) <= 1e-10);
        }
    }
}

#[test]
fn canonical_form_matches_generator_on_basis() {
    let mut r = rng(17);
    for _ in 0..200 {
        let gen = random_generator(&mut r);
        let decomp = canonical_form(&pseudo_kraus(&choi_of_generator(&gen)).unwrap());
        assert!(decomp.h_can.is_hermitian(1e-10));
        assert!(decomp.h_can.is_traceless(1e-10));
        for (_, l) in &decomp.jumps {
            assert!(l.is_traceless(1e-10));
        }
        for e in op_basis() {
            assert!(gen.apply(&e).max_abs_diff(&decomp.apply(&e)) < 1e-9);
        }
    }
}

#[test]
fn propagation_with_zero_generator_is_constant() {
    let mut r = rng(19);
    let rho0 = random_density(&mut r);
    let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
    let traj = propagate_master_equation(
        |_t| {
            Ok(GeneratorDecomposition { h_can: ComplexMatrix::zeros(2), jumps: vec![] })
        },
        &rho0,
        &grid,
        10,
    )
    .unwrap();
    for rho in traj {
        assert!(rho.max_abs_diff(&rho0) < 1e-14);
    }
}

#[test]
fn propagation_matches_closed_form_decay() {
    // Time-independent amplitude damping: rho00' = e^{-gt} rho00(0) and
    // rho01' = e^{-gt/2} rho01(0).
    let gamma = 0.8;
    let rho0 = plus_state();
    let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
    let traj = propagate_master_equation(
        |_t| {
            Ok(GeneratorDecomposition {
                h_can: ComplexMatrix::zeros(2),
                jumps: vec![(gamma, sigma_minus())],
            })
        },
        &rho0,
        &grid,
        10,
    )
    .unwrap();
    for (k, rho) in traj.iter().enumerate() {
        let t = grid[k];
        assert!((rho[(0, 0)].re - 0.5 * (-gamma * t).exp()).abs() < 1e-8);
        assert!((rho[(0, 1)].re - 0.5 * (-gamma * t / 2.0).exp()).abs() < 1e-8);
    }
}

#[test]
fn propagation_rejects_bad_grids() {
    let rho0 = plus_state();
    let ok = |_t: f64| {
        Ok(GeneratorDecomposition { h_can: ComplexMatrix::zeros(2), jumps: vec![] })
    };
    assert!(matches!(
        propagate_master_equation(ok, &rho0, &[0.5, 1.0], 10),
        Err(MapError::BadTimeGrid)
    ));
    let ok = |_t: f64| {
        Ok(GeneratorDecomposition { h_can: ComplexMatrix::zeros(2), jumps: vec![] })
    };
    assert!(matches!(
        propagate_master_equation(ok, &rho0, &[0.0, 1.0, 1.0], 10),
        Err(MapError::BadTimeGrid)
    ));
}

#[test]
fn steady_state_of_zero_generator_spans_everything() {
    let ss = steady_state(&TlsGenerator::zero());
    assert_eq!(ss.basis.len(), 4);
    let rep = ss.representative.expect("identity/2 lies in the span");
    assert!((rep.trace() - c(1., 0.)).norm() < 1e-10);
}

#[test]
fn steady_state_of_dephasing_generator_is_population_plane() {
    let gen = TlsGenerator::from_elements(
        0.,
        0.,
        c(0., 0.),
        c(0., 0.),
        c(-0.4, -1.5),
        c(0., 0.),
        c(0., 0.),
    );
    let ss = steady_state(&gen);
    assert_eq!(ss.basis.len(), 2);
    // Every basis element must be diagonal: the span of |0><0| and |1><1|.
    for b in &ss.basis {
        assert!(b[(0, 1)].norm() < 1e-10 && b[(1, 0)].norm() < 1e-10);
    }
    let rep = ss.representative.expect("diagonal unit-trace state exists");
    let residual = gen.apply(&rep).max_abs();
    assert!(residual <= 1e-8);
}

#[test]
fn phase_covariance_residual_cases() {
    let mut r = rng(23);
    let rho = random_density(&mut r);
    let map = TlsMap::phase_covariant(0.8, 0.1, c(0.4, 0.2));
    assert_eq!(phase_covariance_residual(&map, 0.0, &rho), 0.0);
    for _ in 0..20 {
        let phi = r.random_range(0.0..std::f64::consts::TAU);
        assert!(phase_covariance_residual(&map, phi, &rho) <= 1e-10);
    }
    // A map with phi12 != 0 breaks covariance.
    let broken = TlsMap::new(
        0.8,
        0.9,
        c(0.3, 0.),
        c(0., 0.),
        c(0.7, 0.),
        c(0., 0.),
        c(0., 0.),
    )
    .unwrap();
    let res = phase_covariance_residual(&broken, std::f64::consts::FRAC_PI_4, &plus_state());
    assert!(res > 1e-3);
}
