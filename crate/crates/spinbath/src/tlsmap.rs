//! The generic map-to-master-equation engine for a two-level system.
//!
//! The chain is: a structured dynamical map `Phi_t` -> the time-local
//! generator `L_t = dPhi_t/dt . Phi_t^{-1}` -> its Choi matrix -> a
//! pseudo-Kraus decomposition -> the canonical Hamiltonian and minimal
//! dissipator (traceless jump operators), plus propagation of the resulting
//! master equation and the steady state from the generator's null space.
//!
//! Hermiticity preservation and trace preservation of a qubit map leave nine
//! of the sixteen superoperator entries dependent; [`TlsMap`] stores only the
//! seven free parameters and derives the rest, so every value it produces is
//! structurally valid by construction. The same bookkeeping pins the
//! generator class: Hermiticity-preserving and trace-annihilating (HPTA),
//! whose matrix has its last row equal to minus its first row.

use num_complex::Complex64;
use thiserror::Error;

use crate::matkit::{
    c, devec2, hermitian_eig, inverse, null_space, vec2, ComplexMatrix, MatError, Spectrum,
    DEFAULT_TOL,
};

/// Default number of internal RK4 substeps per grid interval.
pub const DEFAULT_SUBSTEPS: usize = 10;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map parameters must be finite")]
    NonFinite,
    #[error("map is singular at t = {t} (|det| = {det_abs:.3e}); the generator diverges here")]
    SingularMap { t: f64, det_abs: f64 },
    #[error("finite-difference derivative is not finite at t = {t}")]
    NonFiniteDerivative { t: f64 },
    #[error("no analytic derivative available for this map family")]
    NoAnalyticDerivative,
    #[error("matrix violates the generator structure (max violation {max_violation:.3e})")]
    StructureViolation { max_violation: f64 },
    #[error("not a valid density matrix: {reason}")]
    InvalidDensity { reason: String },
    #[error("Choi matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitianChoi { defect: f64 },
    #[error("time grid must be strictly increasing from 0")]
    BadTimeGrid,
    #[error("integration step underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("propagated state lost unit trace at t = {t} (|Tr - 1| = {drift:.3e})")]
    TraceDrift { t: f64, drift: f64 },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Check that `rho` is a valid qubit density matrix: Hermitian, unit trace,
/// positive semidefinite, all within `tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<(), MapError> {
    if rho.dim() != 2 {
        return Err(MapError::InvalidDensity { reason: format!("dimension {} != 2", rho.dim()) });
    }
    if !rho.is_hermitian(tol) {
        return Err(MapError::InvalidDensity { reason: "not Hermitian".into() });
    }
    if (rho.trace() - c(1., 0.)).norm() > tol {
        return Err(MapError::InvalidDensity { reason: "trace differs from one".into() });
    }
    let spec = hermitian_eig(rho).map_err(MapError::Mat)?;
    if spec.eigenvalues().iter().any(|&l| l < -tol) {
        return Err(MapError::InvalidDensity { reason: "negative eigenvalue".into() });
    }
    Ok(())
}

/// General dynamical map of a qubit, stored through its seven free
/// parameters. The assembled 4x4 matrix derives the nine dependent entries,
/// so Hermiticity and trace preservation hold for any parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsMap {
    pub phi11: f64,
    pub phi44: f64,
    pub phi12: Complex64,
    pub phi21: Complex64,
    pub phi22: Complex64,
    pub phi23: Complex64,
    pub phi24: Complex64,
}

impl TlsMap {
    pub fn new(
        phi11: f64,
        phi44: f64,
        phi12: Complex64,
        phi21: Complex64,
        phi22: Complex64,
        phi23: Complex64,
        phi24: Complex64,
    ) -> Result<Self, MapError> {
        let finite = phi11.is_finite()
            && phi44.is_finite()
            && [phi12, phi21, phi22, phi23, phi24]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(MapError::NonFinite);
        }
        Ok(Self { phi11, phi44, phi12, phi21, phi22, phi23, phi24 })
    }

    /// The identity superoperator.
    pub fn identity() -> Self {
        Self::new(1.0, 1.0, c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)).unwrap()
    }

    /// Diagonal-plus-corner map of a phase-covariant channel:
    /// `phi11 = alpha`, `phi44 = 1 - eta`, `phi22 = delta`, rest zero.
    pub fn phase_covariant(alpha: f64, eta: f64, delta: Complex64) -> Self {
        Self::new(alpha, 1.0 - eta, c(0., 0.), c(0., 0.), delta, c(0., 0.), c(0., 0.)).unwrap()
    }

    /// Assemble the full 4x4 superoperator matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let p11 = c(self.phi11, 0.);
        let p44 = c(self.phi44, 0.);
        let one = c(1., 0.);
        ComplexMatrix::from_rows(
            4,
            &[
                p11, self.phi12, self.phi12.conj(), one - p44,
                self.phi21, self.phi22, self.phi23, self.phi24,
                self.phi21.conj(), self.phi23.conj(), self.phi22.conj(), self.phi24.conj(),
                one - p11, -self.phi12, -self.phi12.conj(), p44,
            ],
        )
        .expect("entries finite by construction")
    }

    /// Apply the map to a density matrix: `rho' = devec(Phi . vec rho)`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, MapError> {
        validate_density(rho, DEFAULT_TOL)?;
        Ok(self.apply_operator(rho))
    }

    /// Apply to an arbitrary qubit operator without density-matrix checks.
    pub fn apply_operator(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let v = vec2(op).expect("qubit operator");
        devec2(&self.matrix().mul_vec(&v)).expect("length 4")
    }
}

/// A deterministic time-indexed family of maps, the input to generator
/// extraction. `derivative_at` returns the analytic `dPhi/dt` as a 4x4
/// matrix when the family has one; finite differences are the fallback.
pub trait MapFamily {
    fn map_at(&self, t: f64) -> TlsMap;

    fn derivative_at(&self, _t: f64) -> Option<ComplexMatrix> {
        None
    }
}

/// How `dPhi/dt` is obtained in [`generator_from_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Use the family's analytic derivative; error if it has none.
    Analytic,
    /// Fourth-order finite differences with the given step, or the default
    /// `1e-5 * max(1, |t|)` when `None`. Stencils never evaluate the family
    /// at negative times.
    FiniteDifference { step: Option<f64> },
}

/// Hermiticity-preserving, trace-annihilating generator of a qubit master
/// equation. Stored through the seven free entries of its first two rows;
/// the third row is conjugate-linked and the last row is the negative of the
/// first, which guarantees a nontrivial null space (steady state).
#[derive(Debug, Clone, PartialEq)]
pub struct TlsGenerator {
    pub l11: f64,
    pub l14: f64,
    pub l12: Complex64,
    pub l21: Complex64,
    pub l22: Complex64,
    pub l23: Complex64,
    pub l24: Complex64,
}

impl TlsGenerator {
    pub fn zero() -> Self {
        Self::from_elements(0.0, 0.0, c(0., 0.), c(0., 0.), c(0., 0.), c(0., 0.), c(0., 0.))
    }

    pub fn from_elements(
        l11: f64,
        l14: f64,
        l12: Complex64,
        l21: Complex64,
        l22: Complex64,
        l23: Complex64,
        l24: Complex64,
    ) -> Self {
        Self { l11, l14, l12, l21, l22, l23, l24 }
    }

    /// Interpret a raw 4x4 matrix as a generator, rejecting it when any
    /// structural relation is violated beyond `tol`.
    pub fn from_matrix(m: &ComplexMatrix, tol: f64) -> Result<Self, MapError> {
        let report = validate_generator_structure(m);
        if report.max_violation > tol {
            return Err(MapError::StructureViolation { max_violation: report.max_violation });
        }
        Ok(Self::from_elements(
            m[(0, 0)].re,
            m[(0, 3)].re,
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(1, 3)],
        ))
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let l11 = c(self.l11, 0.);
        let l14 = c(self.l14, 0.);
        ComplexMatrix::from_rows(
            4,
            &[
                l11, self.l12, self.l12.conj(), l14,
                self.l21, self.l22, self.l23, self.l24,
                self.l21.conj(), self.l23.conj(), self.l22.conj(), self.l24.conj(),
                -l11, -self.l12, -self.l12.conj(), -l14,
            ],
        )
        .expect("entries finite")
    }

    /// Generator action `L(op) = devec(L . vec op)`. Trace-annihilating by
    /// the row structure.
    pub fn apply(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let v = vec2(op).expect("qubit operator");
        devec2(&self.matrix().mul_vec(&v)).expect("length 4")
    }
}

/// Check every structural relation of a qubit dynamical map on a raw 4x4
/// matrix and report the worst violation. Diagnostic only; never fails.
pub fn validate_map_structure(m: &ComplexMatrix) -> StructureReport {
    let one = c(1., 0.);
    let mut violations = Vec::new();
    let mut push = |name: &str, dev: f64| violations.push((name.to_string(), dev));
    push("Im(phi11) = 0", m[(0, 0)].im.abs());
    push("Im(phi44) = 0", m[(3, 3)].im.abs());
    push("phi13 = conj(phi12)", (m[(0, 2)] - m[(0, 1)].conj()).norm());
    push("phi14 = 1 - phi44", (m[(0, 3)] - (one - m[(3, 3)])).norm());
    push("phi31 = conj(phi21)", (m[(2, 0)] - m[(1, 0)].conj()).norm());
    push("phi32 = conj(phi23)", (m[(2, 1)] - m[(1, 2)].conj()).norm());
    push("phi33 = conj(phi22)", (m[(2, 2)] - m[(1, 1)].conj()).norm());
    push("phi34 = conj(phi24)", (m[(2, 3)] - m[(1, 3)].conj()).norm());
    push("phi41 = 1 - phi11", (m[(3, 0)] - (one - m[(0, 0)])).norm());
    push("phi42 = -phi12", (m[(3, 1)] + m[(0, 1)]).norm());
    push("phi43 = -conj(phi12)", (m[(3, 2)] + m[(0, 1)].conj()).norm());
    let max_violation = violations.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    StructureReport { violations, max_violation }
}

/// Diagnostic report of the generator structural relations.
#[derive(Debug, Clone)]
pub struct StructureReport {
    /// `(relation, violation)` pairs, e.g. `("l13 = conj(l12)", 0.0)`.
    pub violations: Vec<(String, f64)>,
    pub max_violation: f64,
}

/// Check every structural relation of an HPTA qubit generator on a raw 4x4
/// matrix and report the worst violation. Diagnostic only; never fails.
pub fn validate_generator_structure(m: &ComplexMatrix) -> StructureReport {
    let mut violations = Vec::new();
    let mut push = |name: &str, dev: f64| violations.push((name.to_string(), dev));
    push("Im(l11) = 0", m[(0, 0)].im.abs());
    push("Im(l14) = 0", m[(0, 3)].im.abs());
    push("l13 = conj(l12)", (m[(0, 2)] - m[(0, 1)].conj()).norm());
    push("l31 = conj(l21)", (m[(2, 0)] - m[(1, 0)].conj()).norm());
    push("l32 = conj(l23)", (m[(2, 1)] - m[(1, 2)].conj()).norm());
    push("l33 = conj(l22)", (m[(2, 2)] - m[(1, 1)].conj()).norm());
    push("l34 = conj(l24)", (m[(2, 3)] - m[(1, 3)].conj()).norm());
    for k in 0..4 {
        push(&format!("l4{} = -l1{}", k + 1, k + 1), (m[(3, k)] + m[(0, k)]).norm());
    }
    let max_violation = violations.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    StructureReport { violations, max_violation }
}

/// Extract the generator `L_t = dPhi/dt . Phi^{-1}` of a map family at time
/// `t`.
pub fn generator_from_map(
    family: &impl MapFamily,
    t: f64,
    mode: DerivativeMode,
) -> Result<TlsGenerator, MapError> {
    let phi = family.map_at(t).matrix();
    let det_abs = crate::matkit::det(&phi).norm();
    if det_abs <= 1e-12 {
        return Err(MapError::SingularMap { t, det_abs });
    }
    let phi_dot = match mode {
        DerivativeMode::Analytic => {
            family.derivative_at(t).ok_or(MapError::NoAnalyticDerivative)?
        }
        DerivativeMode::FiniteDifference { step } => {
            let h = step.unwrap_or_else(|| 1e-5 * 1f64.max(t.abs()));
            let phi_at = |s: f64| family.map_at(s).matrix();
            let d = if t >= 2.0 * h {
                // (f(t-2h) - 8 f(t-h) + 8 f(t+h) - f(t+2h)) / 12h
                phi_at(t - 2.0 * h)
                    .sub(&phi_at(t - h).scale_re(8.0))
                    .add(&phi_at(t + h).scale_re(8.0))
                    .sub(&phi_at(t + 2.0 * h))
                    .scale_re(1.0 / (12.0 * h))
            } else {
                // One-sided fourth-order stencil keeps evaluations at s >= 0.
                phi_at(t)
                    .scale_re(-25.0)
                    .add(&phi_at(t + h).scale_re(48.0))
                    .sub(&phi_at(t + 2.0 * h).scale_re(36.0))
                    .add(&phi_at(t + 3.0 * h).scale_re(16.0))
                    .sub(&phi_at(t + 4.0 * h).scale_re(3.0))
                    .scale_re(1.0 / (12.0 * h))
            };
            if !d.array().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(MapError::NonFiniteDerivative { t });
            }
            d
        }
    };
    // Phi^{-1} numerically; the closed-form element table has no usable
    // normalizer, and the numeric inverse is equivalent.
    let phi_inv = inverse(&phi).map_err(MapError::Mat)?;
    let l = phi_dot.mul(&phi_inv);
    TlsGenerator::from_matrix(&l, 1e-6 * (1.0 + l.max_abs()))
}

/// Reshuffle a 4x4 superoperator matrix `S` into its Choi matrix
/// `(S (x) I)|psi><psi|` against the unnormalized maximally entangled
/// `|psi> = sum_i |ii>`: `C[2a+i, 2b+j] = S[2a+b, 2i+j]`.
pub fn choi_from_superoperator(s: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(s.dim(), 4, "qubit superoperators are 4x4");
    ComplexMatrix::from_fn(4, |row, col| {
        let (a, i) = (row / 2, row % 2);
        let (b, j) = (col / 2, col % 2);
        s[(2 * a + b, 2 * i + j)]
    })
}

/// Choi matrix of a generator: Hermitian and traceless, with the block form
/// `[[A, B], [B^dag, -A]]` where `A = [[l11, l12], [l12*, l14]]` and
/// `B = [[l21, l22], [l23, l24]]`.
pub fn choi_of_generator(gen: &TlsGenerator) -> ComplexMatrix {
    let choi = choi_from_superoperator(&gen.matrix());
    debug_assert!(choi.is_hermitian(1e-12 * (1.0 + choi.max_abs())));
    debug_assert!(choi.trace().norm() <= 1e-12 * (1.0 + choi.max_abs()));
    choi
}

/// Choi matrix of a map; its spectrum yields ordinary Kraus operators.
pub fn choi_of_map(map: &TlsMap) -> ComplexMatrix {
    choi_from_superoperator(&map.matrix())
}

/// Spectral decomposition of a generator Choi matrix: rate / pseudo-Kraus
/// pairs `(gamma_k, E_k)` with unit-Frobenius-norm `E_k`, ordered by
/// descending rate. Negative rates are legitimate and witness
/// non-Markovianity.
#[derive(Debug, Clone)]
pub struct ChoiSpectrum {
    pub pairs: Vec<(f64, ComplexMatrix)>,
}

impl ChoiSpectrum {
    /// Reconstruct the generator action `sum_k gamma_k E_k rho E_k^dag`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(2);
        for (gamma, e) in &self.pairs {
            out = out.add(&e.mul(rho).mul(&e.dagger()).scale_re(*gamma));
        }
        out
    }

    /// Largest Hilbert-Schmidt overlap between distinct pseudo-Kraus
    /// operators; zero for an orthogonal set.
    pub fn max_cross_overlap(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.pairs.len() {
            for j in i + 1..self.pairs.len() {
                worst = worst.max(self.pairs[i].1.hs_inner(&self.pairs[j].1).norm());
            }
        }
        worst
    }
}

/// Eigendecompose a Hermitian Choi matrix into rate / pseudo-Kraus pairs.
pub fn pseudo_kraus(choi: &ComplexMatrix) -> Result<ChoiSpectrum, MapError> {
    let defect = choi.max_abs_diff(&choi.dagger());
    if defect > 1e-9 * (1.0 + choi.max_abs()) {
        return Err(MapError::NonHermitianChoi { defect });
    }
    let spec: Spectrum = hermitian_eig(&choi.add(&choi.dagger()).scale_re(0.5))?;
    let mut pairs: Vec<(f64, ComplexMatrix)> = (0..4)
        .map(|k| {
            let col = spec.eigenvector(k);
            (spec.eigenvalues()[k], devec2(&col).expect("length 4"))
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ChoiSpectrum { pairs })
}

/// Canonical Hamiltonian plus minimal dissipator of a qubit generator. The
/// jump operators are traceless, which is exactly the minimal-dissipation
/// condition.
#[derive(Debug, Clone)]
pub struct GeneratorDecomposition {
    /// Traceless Hermitian canonical Hamiltonian.
    pub h_can: ComplexMatrix,
    /// `(gamma_k, L_k)` with `Tr L_k = 0`.
    pub jumps: Vec<(f64, ComplexMatrix)>,
}

impl GeneratorDecomposition {
    /// Master-equation right-hand side
    /// `-i[H_can, rho] + sum_k gamma_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.h_can.commutator(rho).scale(c(0., -1.));
        for (gamma, l) in &self.jumps {
            out = out.add(&dissipator_term(l, rho).scale_re(*gamma));
        }
        out
    }
}

/// `L rho L^dag - (L^dag L rho + rho L^dag L) / 2`.
pub fn dissipator_term(l: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let ldag = l.dagger();
    let ldl = ldag.mul(l);
    l.mul(rho)
        .mul(&ldag)
        .sub(&ldl.mul(rho).add(&rho.mul(&ldl)).scale_re(0.5))
}

/// Build the canonical Hamiltonian and minimal dissipator from a pseudo-Kraus
/// decomposition:
/// `H_can = -(i/2d) sum_k gamma_k (Tr(E_k) E_k^dag - Tr(E_k^dag) E_k)` and
/// `L_k = E_k - Tr(E_k)/d`, with `d = 2`.
pub fn canonical_form(spectrum: &ChoiSpectrum) -> GeneratorDecomposition {
    let d = 2.0;
    let mut h = ComplexMatrix::zeros(2);
    for (gamma, e) in &spectrum.pairs {
        let tr = e.trace();
        let term = e.dagger().scale(tr).sub(&e.scale(tr.conj()));
        h = h.add(&term.scale(c(0., -1.0 / (2.0 * d)) * c(*gamma, 0.)));
    }
    // Clean rounding: H_can is Hermitian and traceless by construction.
    let h = h.add(&h.dagger()).scale_re(0.5);
    let jumps = spectrum
        .pairs
        .iter()
        .map(|(gamma, e)| {
            let shift = e.trace() / c(d, 0.);
            let l = e.sub(&ComplexMatrix::identity(2).scale(shift));
            (*gamma, l)
        })
        .collect();
    GeneratorDecomposition { h_can: h, jumps }
}

/// Fixed-step propagation of the master equation
/// `drho/dt = -i[H_can(t), rho] + D_t[rho]` with classic fourth-order
/// Runge-Kutta and `substeps` internal steps per grid interval.
///
/// The grid must start at 0 and increase strictly; the initial state must be
/// a valid density matrix. Each returned state keeps unit trace within 1e-8.
pub fn propagate_master_equation<F>(
    mut decomposition_at: F,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    substeps: usize,
) -> Result<Vec<ComplexMatrix>, MapError>
where
    F: FnMut(f64) -> Result<GeneratorDecomposition, MapError>,
{
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MapError::BadTimeGrid);
    }
    validate_density(rho0, DEFAULT_TOL)?;
    let substeps = substeps.max(1);
    let mut rho = rho0.clone();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(rho.clone());
    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = (t1 - t0) / substeps as f64;
        if h <= f64::EPSILON * t1.abs().max(1.0) {
            return Err(MapError::StepUnderflow { t: t0 });
        }
        for k in 0..substeps {
            let t = t0 + k as f64 * h;
            let k1 = decomposition_at(t)?.apply(&rho);
            let mid = decomposition_at(t + 0.5 * h)?;
            let k2 = mid.apply(&rho.add(&k1.scale_re(0.5 * h)));
            let k3 = mid.apply(&rho.add(&k2.scale_re(0.5 * h)));
            let k4 = decomposition_at(t + h)?.apply(&rho.add(&k3.scale_re(h)));
            let increment = k1
                .add(&k2.scale_re(2.0))
                .add(&k3.scale_re(2.0))
                .add(&k4)
                .scale_re(h / 6.0);
            rho = rho.add(&increment);
        }
        let drift = (rho.trace() - c(1., 0.)).norm();
        if drift > 1e-8 {
            return Err(MapError::TraceDrift { t: t1, drift });
        }
        out.push(rho.clone());
    }
    Ok(out)
}

/// Trajectory of a guarded propagation: `None` at grid points falling inside
/// an excluded window around a generator singularity.
#[derive(Debug, Clone)]
pub struct GuardedTrajectory {
    pub states: Vec<Option<ComplexMatrix>>,
    /// Singular instants whose windows were excluded.
    pub singular_times: Vec<f64>,
}

/// Fixed-step propagation that steps around isolated generator
/// singularities.
///
/// Time-local generators of exact dynamics can develop poles at instants
/// where the dynamical map loses invertibility (population propagators
/// crossing, zeros of a dephasing factor). The exact evolution is smooth
/// there and acts as a funnel: every solution of the master equation
/// converges to the same state at the singular instant, so the unique
/// continuation past it is the channel state itself. This routine integrates
/// each regular segment with RK4, excludes a window of half-width `window`
/// around each singular time, and re-anchors on `exact_at` when leaving a
/// window. Grid points inside a window come back as `None`.
pub fn propagate_master_equation_guarded<F, G>(
    mut decomposition_at: F,
    exact_at: G,
    singular_times: &[f64],
    window: f64,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    substeps_per_unit_time: f64,
) -> Result<GuardedTrajectory, MapError>
where
    F: FnMut(f64) -> Result<GeneratorDecomposition, MapError>,
    G: Fn(f64) -> Result<ComplexMatrix, MapError>,
{
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MapError::BadTimeGrid);
    }
    validate_density(rho0, DEFAULT_TOL)?;
    let in_window = |t: f64| singular_times.iter().any(|s| (t - s).abs() <= window);
    let mut rho = rho0.clone();
    let mut anchor = 0.0_f64;
    let mut states: Vec<Option<ComplexMatrix>> = vec![Some(rho.clone())];

    let integrate = |rho: &ComplexMatrix,
                     from: f64,
                     to: f64,
                     decomposition_at: &mut F|
     -> Result<ComplexMatrix, MapError> {
        let span = to - from;
        if span <= 0.0 {
            return Ok(rho.clone());
        }
        let steps = (span * substeps_per_unit_time).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        if h <= f64::EPSILON * to.abs().max(1.0) {
            return Err(MapError::StepUnderflow { t: from });
        }
        let mut cur = rho.clone();
        for k in 0..steps {
            let t = from + k as f64 * h;
            let k1 = decomposition_at(t)?.apply(&cur);
            let mid = decomposition_at(t + 0.5 * h)?;
            let k2 = mid.apply(&cur.add(&k1.scale_re(0.5 * h)));
            let k3 = mid.apply(&cur.add(&k2.scale_re(0.5 * h)));
            let k4 = decomposition_at(t + h)?.apply(&cur.add(&k3.scale_re(h)));
            cur = cur.add(
                &k1.add(&k2.scale_re(2.0))
                    .add(&k3.scale_re(2.0))
                    .add(&k4)
                    .scale_re(h / 6.0),
            );
        }
        Ok(cur)
    };

    for &t_k in &t_grid[1..] {
        if in_window(t_k) {
            states.push(None);
            continue;
        }
        // Hop over any windows that separate the anchor from t_k; the state
        // at a window exit is re-anchored on the channel, so integrating up
        // to the window entry would be discarded anyway.
        let mut crossed: Vec<f64> = singular_times
            .iter()
            .copied()
            .filter(|s| anchor < s - window && s + window < t_k)
            .collect();
        crossed.sort_by(f64::total_cmp);
        if let Some(s) = crossed.last() {
            rho = exact_at(s + window)?;
            anchor = s + window;
        }
        rho = integrate(&rho, anchor, t_k, &mut decomposition_at)?;
        anchor = t_k;
        let drift = (rho.trace() - c(1., 0.)).norm();
        if drift > 1e-8 {
            return Err(MapError::TraceDrift { t: t_k, drift });
        }
        states.push(Some(rho.clone()));
    }
    Ok(GuardedTrajectory { states, singular_times: singular_times.to_vec() })
}

/// Null space of a generator: basis of annihilated qubit operators plus, when
/// one exists in the span, a Hermitian unit-trace representative (the steady
/// state).
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub basis: Vec<ComplexMatrix>,
    pub representative: Option<ComplexMatrix>,
}

/// Solve `L . vec(v) = 0`. The generator's last row is the negative of its
/// first, so the null space is at least one-dimensional. Each basis element
/// satisfies `|L vec(v)|_max <= 1e-8`.
pub fn steady_state(gen: &TlsGenerator) -> SteadyState {
    let l = gen.matrix();
    let raw = null_space(&l, 1e-8);
    let basis: Vec<ComplexMatrix> =
        raw.iter().map(|v| devec2(v).expect("length 4")).collect();

    // The generator preserves Hermiticity, so the null space is closed under
    // the adjoint; project each basis element onto its Hermitian and
    // anti-Hermitian parts and look for one with nonvanishing trace.
    let mut representative = None;
    let residual_of = |m: &ComplexMatrix| -> f64 {
        let v = vec2(m).expect("qubit operator");
        l.mul_vec(&v).iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    for m in &basis {
        let herm = m.add(&m.dagger()).scale_re(0.5);
        let anti = m.sub(&m.dagger()).scale(c(0., -0.5));
        for candidate in [herm, anti] {
            let tr = candidate.trace();
            if tr.norm() > 1e-8 {
                let scaled = candidate.scale(c(1., 0.) / tr);
                if residual_of(&scaled) <= 1e-8 {
                    representative = Some(scaled);
                    break;
                }
            }
        }
        if representative.is_some() {
            break;
        }
    }
    SteadyState { basis, representative }
}

/// `max | e^{-i sz phi} Phi[rho] e^{i sz phi} - Phi[e^{-i sz phi} rho e^{i sz phi}] |`,
/// zero for phase-covariant maps.
pub fn phase_covariance_residual(map: &TlsMap, phi: f64, rho: &ComplexMatrix) -> f64 {
    let u = ComplexMatrix::from_rows(
        2,
        &[c(0., -phi).exp(), c(0., 0.), c(0., 0.), c(0., phi).exp()],
    )
    .expect("finite");
    let udag = u.dagger();
    let lhs = u.mul(&map.apply_operator(rho)).mul(&udag);
    let rhs = map.apply_operator(&u.mul(rho).mul(&udag));
    lhs.max_abs_diff(&rhs)
}

#[cfg(test)]
mod tests;
