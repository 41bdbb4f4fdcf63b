//! Exact dissipative dynamics of the central spin model.
//!
//! One qubit couples uniformly to `N` bath spins through an XX (flip-flop)
//! interaction,
//!
//! ```text
//! H = (omega0/2) sz + (omega/N) Jz + (epsilon/sqrt(N)) (sx Jx + sy Jy),
//! ```
//!
//! with the bath reduced to the `(N+1)`-dimensional symmetric sector by the
//! collective operators `J_k`. The excitation-conserving interaction splits
//! the joint Hilbert space into two-dimensional blocks `{|0,n>, |1,n-1>}`
//! plus two uncoupled corner states, so the reduced qubit dynamics has closed
//! form: populations evolve through two real propagators `alpha_t`, `eta_t`
//! and the coherence through a complex `delta_t`, all as sums over the `N`
//! block spectra weighted by the Gibbs state of the bath.
//!
//! Everything downstream of the propagators (canonical rates, the Choi
//! spectrum, the phase-covariant master equation, the Kraus channel, the
//! steady state, the second-order perturbative canonical Hamiltonian) is
//! closed form too. A dense `2(N+1)`-dimensional unitary reference
//! ([`brute_force_state`]) serves as the independent oracle.

use num_complex::Complex64;
use thiserror::Error;

use crate::matkit::{
    c, expm_hermitian_generator, kron, partial_trace_bath, pauli_x, pauli_y, pauli_z,
    sigma_minus, sigma_plus, ComplexMatrix, MatError,
};
use crate::tlsmap::{
    dissipator_term, validate_density, ChoiSpectrum, MapError, MapFamily, TlsGenerator, TlsMap,
    DEFAULT_SUBSTEPS,
};

#[derive(Debug, Error)]
pub enum CsError {
    #[error("invalid central-spin parameters: {0}")]
    InvalidParams(String),
    #[error("zero system-bath coupling: the block spectrum is undefined at epsilon = 0")]
    ZeroCoupling,
    #[error("population propagators degenerate at t = {t} (|alpha - eta| = {gap:.3e}); rates diverge")]
    DegenerateRates { t: f64, gap: f64 },
    #[error("coherence propagator vanishes at t = {t} (|delta| = {modulus:.3e}); rates diverge")]
    SingularCoherence { t: f64, modulus: f64 },
    #[error("bath of {n_bath} spins exceeds the dense brute-force guard (N <= {max})")]
    BathTooLarge { n_bath: usize, max: usize },
    #[error("perturbative denominator N omega0 - omega vanishes")]
    ResonantDenominator,
    #[error("channel eigenvalue {value:.3e} is negative beyond rounding; map is not CP")]
    NotCompletelyPositive { value: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Largest bath accepted by the dense brute-force reference.
pub const MAX_BRUTE_FORCE_BATH: usize = 64;

/// Compensated (Kahan) accumulator; the propagator sums run over bath indices
/// with exponential weights spanning `e^{+-beta omega / 2}`.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplexSum {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(&self) -> Complex64 {
        c(self.re.value(), self.im.value())
    }
}

/// Physical parameters of the dissipative central spin model.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSpinParams {
    /// Transition frequency of the central spin.
    pub omega0: f64,
    /// Bath frequency scale; the bath Hamiltonian is `(omega/N) Jz`.
    pub omega: f64,
    /// Number of bath spins.
    pub n_bath: usize,
    /// Interaction strength; the coupling constant is `epsilon / sqrt(N)`.
    pub epsilon: f64,
    /// Inverse temperature of the initial Gibbs state of the bath. Any
    /// finite value (including negative) keeps the partition sum finite.
    pub beta: f64,
}

impl CentralSpinParams {
    pub fn new(
        omega0: f64,
        omega: f64,
        n_bath: usize,
        epsilon: f64,
        beta: f64,
    ) -> Result<Self, CsError> {
        if n_bath < 1 {
            return Err(CsError::InvalidParams("n_bath must be at least 1".into()));
        }
        for (name, v) in [("omega0", omega0), ("omega", omega), ("epsilon", epsilon), ("beta", beta)]
        {
            if !v.is_finite() {
                return Err(CsError::InvalidParams(format!("{name} must be finite")));
            }
        }
        Ok(Self { omega0, omega, n_bath, epsilon, beta })
    }

    /// The parameter set of the built-in `fig1*` scenarios:
    /// `omega = 1, omega0 = 1.5, N = 50, epsilon = 0.5, beta = 0.5`.
    pub fn figure1() -> Self {
        Self::new(1.5, 1.0, 50, 0.5, 0.5).unwrap()
    }

    /// Scaled coupling `lambda = epsilon / sqrt(N)`.
    pub fn lambda(&self) -> f64 {
        self.epsilon / (self.n_bath as f64).sqrt()
    }

    /// Block detuning `b = omega - N omega0`.
    pub fn detuning(&self) -> f64 {
        self.omega - self.n_bath as f64 * self.omega0
    }

    /// Gibbs weight `e^{-(beta omega / 2)(1 - 2 m / N)}` of bath level `m`.
    pub fn gibbs_weight(&self, m: usize) -> f64 {
        (-(self.beta * self.omega / 2.0) * (1.0 - 2.0 * m as f64 / self.n_bath as f64)).exp()
    }

    /// Partition sum `Z = sum_m w_m > 0`.
    pub fn partition(&self) -> f64 {
        let mut z = KahanSum::default();
        for m in 0..=self.n_bath {
            z.add(self.gibbs_weight(m));
        }
        z.value()
    }
}

/// Per-block spectral data of the total Hamiltonian: coupling `a_n`, the
/// quadratic roots `chi_+-` (mixing amplitudes), and the block eigenvalues
/// `lambda_+-`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralData {
    pub a_n: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

/// Spectral data of block `n` (1-based, `1 <= n <= N`). The block couples
/// `|0, n>` to `|1, n-1>` with strength `a_n / N`, where
/// `a_n = epsilon sqrt(N) sqrt(n (N - n + 1))`.
pub fn spectral_data(p: &CentralSpinParams, n: usize) -> Result<SpectralData, CsError> {
    if p.epsilon == 0.0 {
        return Err(CsError::ZeroCoupling);
    }
    if n < 1 || n > p.n_bath {
        return Err(CsError::InvalidParams(format!(
            "block index {n} outside 1..={}",
            p.n_bath
        )));
    }
    let nf = p.n_bath as f64;
    let nn = n as f64;
    let a_n = p.epsilon * nf.sqrt() * (nn * (nf - nn + 1.0)).sqrt();
    let b = p.detuning();
    let s = (b * b + 4.0 * a_n * a_n).sqrt();
    // chi_+- = (-b +- s) / 2 a_n, evaluated cancellation-free on both signs
    // of b using chi_+ chi_- = -1.
    let (chi_plus, chi_minus) = if b >= 0.0 {
        (2.0 * a_n / (b + s), -(b + s) / (2.0 * a_n))
    } else {
        ((s - b) / (2.0 * a_n), -2.0 * a_n / (s - b))
    };
    let mean = (nf - (2.0 * nn - 1.0)) * p.omega / (2.0 * nf);
    Ok(SpectralData {
        a_n,
        chi_plus,
        chi_minus,
        lambda_plus: mean + s / (2.0 * nf),
        lambda_minus: mean - s / (2.0 * nf),
    })
}

/// Exact propagators of the reduced dynamics and their analytic time
/// derivatives: `rho00(t) = alpha_t rho00(0) + eta_t rho11(0)` and
/// `rho01(t) = delta_t rho01(0)`.
#[derive(Debug, Clone, Copy)]
pub struct Propagators {
    pub alpha: f64,
    pub eta: f64,
    pub delta: Complex64,
    pub alpha_dot: f64,
    pub eta_dot: f64,
    pub delta_dot: Complex64,
}

/// Evaluate the closed-form propagators at time `t`.
///
/// Each bath block contributes three survival/transfer amplitudes:
///
/// * `f_m(t) = <0 m| U |0 m>` with branch weights `chi^2/(1+chi^2)`,
/// * `g_n(t) = <1 n-1| U |1 n-1>` with weights `1/(1+chi^2)`,
/// * `h_n(t) = <0 n| U |1 n-1>` with weights `chi/(1+chi^2)`,
///
/// and `alpha = sum w_m |f_m|^2 / Z`, `eta = sum w_{n-1} |h_n|^2 / Z`,
/// `delta = sum w_m f_m conj(g_{m+1}) / Z` with the two uncoupled corner
/// states supplying pure phases `e^{-+ i (omega + omega0) t / 2}`.
/// Derivatives differentiate the exponentials term by term, so the rates
/// near `t = 0` stay clean of finite-difference noise.
///
/// `epsilon = 0` falls back to free evolution: `alpha = 1`, `eta = 0`,
/// `delta = e^{-i omega0 t}`.
pub fn propagators(p: &CentralSpinParams, t: f64) -> Propagators {
    if p.epsilon == 0.0 {
        let delta = c(0., -p.omega0 * t).exp();
        return Propagators {
            alpha: 1.0,
            eta: 0.0,
            delta,
            alpha_dot: 0.0,
            eta_dot: 0.0,
            delta_dot: c(0., -p.omega0) * delta,
        };
    }
    let n_bath = p.n_bath;
    let z = p.partition();
    let corner = (p.omega + p.omega0) / 2.0;

    // f_m, g_m and their derivatives for m = 0..=N+1 where defined.
    let mut f = vec![c(0., 0.); n_bath + 1];
    let mut f_dot = vec![c(0., 0.); n_bath + 1];
    let mut g = vec![c(0., 0.); n_bath + 2];
    let mut g_dot = vec![c(0., 0.); n_bath + 2];
    let mut h = vec![c(0., 0.); n_bath + 1];
    let mut h_dot = vec![c(0., 0.); n_bath + 1];

    f[0] = c(0., -corner * t).exp();
    f_dot[0] = c(0., -corner) * f[0];
    g[n_bath + 1] = c(0., corner * t).exp();
    g_dot[n_bath + 1] = c(0., corner) * g[n_bath + 1];

    for n in 1..=n_bath {
        let sd = spectral_data(p, n).expect("epsilon nonzero and n in range");
        let (cp, cm) = (sd.chi_plus, sd.chi_minus);
        let (dp, dm) = (1.0 / (1.0 + cp * cp), 1.0 / (1.0 + cm * cm));
        let (fp, fm) = (cp * cp * dp, cm * cm * dm);
        let (hp, hm) = (cp * dp, cm * dm);
        let ep = c(0., -sd.lambda_plus * t).exp();
        let em = c(0., -sd.lambda_minus * t).exp();
        let ep_dot = c(0., -sd.lambda_plus) * ep;
        let em_dot = c(0., -sd.lambda_minus) * em;
        f[n] = ep.scale(fp) + em.scale(fm);
        f_dot[n] = ep_dot.scale(fp) + em_dot.scale(fm);
        g[n] = ep.scale(dp) + em.scale(dm);
        g_dot[n] = ep_dot.scale(dp) + em_dot.scale(dm);
        h[n] = ep.scale(hp) + em.scale(hm);
        h_dot[n] = ep_dot.scale(hp) + em_dot.scale(hm);
    }

    let mut alpha = KahanSum::default();
    let mut alpha_dot = KahanSum::default();
    let mut eta = KahanSum::default();
    let mut eta_dot = KahanSum::default();
    let mut delta = KahanComplexSum::default();
    let mut delta_dot = KahanComplexSum::default();
    for m in 0..=n_bath {
        let w = p.gibbs_weight(m) / z;
        alpha.add(w * f[m].norm_sqr());
        alpha_dot.add(w * 2.0 * (f_dot[m] * f[m].conj()).re);
        delta.add((f[m] * g[m + 1].conj()).scale(w));
        delta_dot.add((f_dot[m] * g[m + 1].conj() + f[m] * g_dot[m + 1].conj()).scale(w));
        if m < n_bath {
            let n = m + 1;
            eta.add(w * h[n].norm_sqr());
            eta_dot.add(w * 2.0 * (h_dot[n] * h[n].conj()).re);
        }
    }

    Propagators {
        alpha: alpha.value(),
        eta: eta.value(),
        delta: delta.value(),
        alpha_dot: alpha_dot.value(),
        eta_dot: eta_dot.value(),
        delta_dot: delta_dot.value(),
    }
}

/// Closed-form reduced state at time `t`.
pub fn exact_state(
    p: &CentralSpinParams,
    rho0: &ComplexMatrix,
    t: f64,
) -> Result<ComplexMatrix, CsError> {
    validate_density(rho0, crate::matkit::DEFAULT_TOL)?;
    let pr = propagators(p, t);
    Ok(state_from_propagators(&pr, rho0))
}

fn state_from_propagators(pr: &Propagators, rho0: &ComplexMatrix) -> ComplexMatrix {
    let p00 = pr.alpha * rho0[(0, 0)].re + pr.eta * rho0[(1, 1)].re;
    let p01 = pr.delta * rho0[(0, 1)];
    ComplexMatrix::from_rows(2, &[c(p00, 0.), p01, p01.conj(), c(1.0 - p00, 0.)])
        .expect("finite entries")
}

/// Canonical rates of the central-spin generator. `zeta` and `gamma` drive
/// the populations, `theta = delta_dot / delta` the coherence; `nu_plus`,
/// `nu_minus`, `nu_z` are the gain, loss, and dephasing rates of the
/// phase-covariant master equation. `nu_minus < 0` somewhere witnesses
/// non-Markovian backflow.
#[derive(Debug, Clone, Copy)]
pub struct CsRates {
    pub zeta: f64,
    pub gamma: f64,
    pub theta: Complex64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_z: f64,
}

/// Rates at time `t`:
/// `zeta = [eta_dot (alpha - 1) - alpha_dot (eta - 1)] / (alpha - eta)`,
/// `gamma = [alpha eta_dot - eta alpha_dot] / (alpha - eta)`,
/// `theta = delta_dot / delta`.
pub fn rates(p: &CentralSpinParams, t: f64) -> Result<CsRates, CsError> {
    rates_from_propagators(&propagators(p, t), t)
}

pub(crate) fn rates_from_propagators(pr: &Propagators, t: f64) -> Result<CsRates, CsError> {
    let gap = (pr.alpha - pr.eta).abs();
    if gap <= 1e-12 {
        return Err(CsError::DegenerateRates { t, gap });
    }
    let modulus = pr.delta.norm();
    if modulus <= 1e-12 {
        return Err(CsError::SingularCoherence { t, modulus });
    }
    let denom = pr.alpha - pr.eta;
    let zeta = (pr.eta_dot * (pr.alpha - 1.0) - pr.alpha_dot * (pr.eta - 1.0)) / denom;
    let gamma = (pr.alpha * pr.eta_dot - pr.eta * pr.alpha_dot) / denom;
    let theta = pr.delta_dot / pr.delta;
    Ok(CsRates {
        zeta,
        gamma,
        theta,
        nu_plus: gamma,
        nu_minus: -zeta,
        nu_z: (zeta - gamma - 2.0 * theta.re) / 4.0,
    })
}

/// Generator of the reduced dynamics: `l11 = zeta`, `l14 = gamma`,
/// `l22 = theta`, all other free entries zero.
pub fn generator_cs(p: &CentralSpinParams, t: f64) -> Result<TlsGenerator, CsError> {
    let r = rates(p, t)?;
    Ok(TlsGenerator::from_elements(
        r.zeta,
        r.gamma,
        c(0., 0.),
        c(0., 0.),
        r.theta,
        c(0., 0.),
        c(0., 0.),
    ))
}

/// Canonical Hamiltonian `H_can = -(Im theta / 2) sz`.
pub fn canonical_h_cs(p: &CentralSpinParams, t: f64) -> Result<ComplexMatrix, CsError> {
    Ok(pauli_z().scale_re(-rates(p, t)?.theta.im / 2.0))
}

/// Closed-form Choi spectrum of the generator. The eigenvalues are
/// `gamma`, `-zeta`, and `(zeta - gamma -+ s)/2` with
/// `s = sqrt((gamma + zeta)^2 + 4|theta|^2)`; the pseudo-Kraus operators are
/// `sigma_+`, `sigma_-`, and two orthogonal diagonal operators
/// `diag(xi, 1)/sqrt(1 + |xi|^2)` with `xi = (lambda + gamma)/conj(theta)`.
pub fn choi_spectrum_cs(p: &CentralSpinParams, t: f64) -> Result<ChoiSpectrum, CsError> {
    Ok(choi_spectrum_from_rates(&rates(p, t)?))
}

/// The closed-form spectrum for given rates; exposed so synthetic rates can
/// be cross-checked against the generic pipeline.
pub fn choi_spectrum_from_rates(r: &CsRates) -> ChoiSpectrum {
    let s = ((r.gamma + r.zeta).powi(2) + 4.0 * r.theta.norm_sqr()).sqrt();
    let lambda3 = (r.zeta - r.gamma - s) / 2.0;
    let lambda4 = (r.zeta - r.gamma + s) / 2.0;
    let diag_pair = |lambda: f64| -> ComplexMatrix {
        if r.theta.norm() < 1e-14 {
            // theta -> 0: the diagonal block is already diagonal with
            // entries (zeta, -gamma).
            if (lambda - r.zeta).abs() <= (lambda + r.gamma).abs() {
                ComplexMatrix::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)])
                    .unwrap()
            } else {
                ComplexMatrix::from_rows(2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
                    .unwrap()
            }
        } else {
            let xi = (lambda + r.gamma) / r.theta.conj();
            let norm = (1.0 + xi.norm_sqr()).sqrt();
            ComplexMatrix::from_rows(
                2,
                &[xi / norm, c(0., 0.), c(0., 0.), c(1.0 / norm, 0.)],
            )
            .unwrap()
        }
    };
    let mut pairs = vec![
        (r.gamma, sigma_plus()),
        (-r.zeta, sigma_minus()),
        (lambda3, diag_pair(lambda3)),
        (lambda4, diag_pair(lambda4)),
    ];
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    ChoiSpectrum { pairs }
}

/// Right-hand side of the exact phase-covariant master equation:
/// `-i[H_can, rho] + nu_+ D[sigma_+] + nu_- D[sigma_-] + nu_z D[sigma_z]`.
pub fn master_equation_cs(
    p: &CentralSpinParams,
    t: f64,
    rho: &ComplexMatrix,
) -> Result<ComplexMatrix, CsError> {
    validate_density(rho, crate::matkit::DEFAULT_TOL)?;
    let r = rates(p, t)?;
    let h_can = pauli_z().scale_re(-r.theta.im / 2.0);
    let mut out = h_can.commutator(rho).scale(c(0., -1.));
    out = out.add(&dissipator_term(&sigma_plus(), rho).scale_re(r.nu_plus));
    out = out.add(&dissipator_term(&sigma_minus(), rho).scale_re(r.nu_minus));
    out = out.add(&dissipator_term(&pauli_z(), rho).scale_re(r.nu_z));
    Ok(out)
}

/// The four Kraus operators of the exact channel, from the Choi spectrum of
/// the map itself: `K1 = sqrt(eta) sigma_+`, `K2 = sqrt(1 - alpha) sigma_-`,
/// and two diagonal operators from the outer Choi block.
pub fn kraus_ops_cs(p: &CentralSpinParams, t: f64) -> Result<Vec<ComplexMatrix>, CsError> {
    let pr = propagators(p, t);
    let clamp = |v: f64| -> Result<f64, CsError> {
        if v < -1e-9 {
            Err(CsError::NotCompletelyPositive { value: v })
        } else {
            Ok(v.max(0.0))
        }
    };
    let k1 = sigma_plus().scale_re(clamp(pr.eta)?.sqrt());
    let k2 = sigma_minus().scale_re(clamp(1.0 - pr.alpha)?.sqrt());
    let zsum = pr.alpha + pr.eta - 1.0;
    let disc = (zsum * zsum + 4.0 * pr.delta.norm_sqr()).sqrt();
    let lambda3 = clamp((pr.alpha + 1.0 - pr.eta + disc) / 2.0)?;
    let lambda4 = clamp((pr.alpha + 1.0 - pr.eta - disc) / 2.0)?;
    let (k3, k4) = if pr.delta.norm() < 1e-14 {
        // Fully dephased channel: the outer Choi block is diag(alpha, 1-eta).
        let top = ComplexMatrix::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)])
            .unwrap();
        let bot = ComplexMatrix::from_rows(2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
            .unwrap();
        if zsum >= 0.0 {
            (top.scale_re(lambda3.sqrt()), bot.scale_re(lambda4.sqrt()))
        } else {
            (bot.scale_re(lambda3.sqrt()), top.scale_re(lambda4.sqrt()))
        }
    } else {
        let x = |sign: f64| (zsum + sign * disc) / (2.0 * pr.delta.conj());
        let diag = |x: Complex64, lambda: f64| {
            let norm = (1.0 + x.norm_sqr()).sqrt();
            ComplexMatrix::from_rows(
                2,
                &[x * lambda.sqrt() / norm, c(0., 0.), c(0., 0.), c(lambda.sqrt() / norm, 0.)],
            )
            .unwrap()
        };
        (diag(x(1.0), lambda3), diag(x(-1.0), lambda4))
    };
    Ok(vec![k1, k2, k3, k4])
}

/// Dense reference: build the full `2(N+1)`-dimensional Hamiltonian,
/// exponentiate it, and trace out the bath. This is the oracle every closed
/// form above must match.
pub fn brute_force_state(
    p: &CentralSpinParams,
    rho0: &ComplexMatrix,
    t: f64,
) -> Result<ComplexMatrix, CsError> {
    validate_density(rho0, crate::matkit::DEFAULT_TOL)?;
    let u = brute_force_unitary(p, t)?;
    let rho_b = gibbs_state(p);
    let rho_sb = kron(rho0, &rho_b);
    let evolved = u.mul(&rho_sb).mul(&u.dagger());
    Ok(partial_trace_bath(&evolved, p.n_bath + 1)?)
}

/// `e^{-iHt}` on the full space; exposed for unitarity checks.
pub fn brute_force_unitary(p: &CentralSpinParams, t: f64) -> Result<ComplexMatrix, CsError> {
    if p.n_bath > MAX_BRUTE_FORCE_BATH {
        return Err(CsError::BathTooLarge { n_bath: p.n_bath, max: MAX_BRUTE_FORCE_BATH });
    }
    Ok(expm_hermitian_generator(&total_hamiltonian(p), t)?)
}

/// Gibbs state of the bath in the symmetric sector.
pub fn gibbs_state(p: &CentralSpinParams) -> ComplexMatrix {
    let z = p.partition();
    let mut rho = ComplexMatrix::zeros(p.n_bath + 1);
    for m in 0..=p.n_bath {
        rho[(m, m)] = c(p.gibbs_weight(m) / z, 0.);
    }
    rho
}

/// Total Hamiltonian on the `2(N+1)`-dimensional space, system slot first.
pub fn total_hamiltonian(p: &CentralSpinParams) -> ComplexMatrix {
    let dim_b = p.n_bath + 1;
    let id_s = ComplexMatrix::identity(2);
    let id_b = ComplexMatrix::identity(dim_b);
    let (jx, jy, jz) = collective_spin_ops(p.n_bath);
    kron(&pauli_z().scale_re(p.omega0 / 2.0), &id_b)
        .add(&kron(&id_s, &jz.scale_re(p.omega / p.n_bath as f64)))
        .add(
            &kron(&pauli_x(), &jx)
                .add(&kron(&pauli_y(), &jy))
                .scale_re(p.lambda()),
        )
}

/// Collective spin operators `J_x, J_y, J_z` in the symmetric sector basis
/// `|n>`, `n = 0..=N`, with `J_z |n> = (N/2 - n) |n>`.
pub fn collective_spin_ops(n_bath: usize) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let dim = n_bath + 1;
    let j = n_bath as f64 / 2.0;
    let mut jz = ComplexMatrix::zeros(dim);
    let mut jp = ComplexMatrix::zeros(dim);
    for n in 0..dim {
        jz[(n, n)] = c(j - n as f64, 0.);
        if n >= 1 {
            // J_+ |n> = sqrt(n (N - n + 1)) |n - 1>
            let nf = n as f64;
            jp[(n - 1, n)] = c((nf * (n_bath as f64 - nf + 1.0)).sqrt(), 0.);
        }
    }
    let jm = jp.dagger();
    let jx = jp.add(&jm).scale_re(0.5);
    let jy = jp.sub(&jm).scale(c(0., -0.5));
    (jx, jy, jz)
}

/// Second-order perturbative canonical Hamiltonian
/// `H_S + lambda^2 c(t) S1 [e^{beta omega / N} |0><0| - |1><1|]`.
pub fn perturbative_h_can(p: &CentralSpinParams, t: f64) -> Result<ComplexMatrix, CsError> {
    let nf = p.n_bath as f64;
    let denom = nf * p.omega0 - p.omega;
    if denom.abs() < 1e-12 {
        return Err(CsError::ResonantDenominator);
    }
    let c_t = nf * ((p.omega * t / nf).cos() - (p.omega0 * t).cos()) / denom;
    let s1 = perturbative_s1(p);
    let scale = p.lambda().powi(2) * c_t * s1;
    let bw = p.beta * p.omega;
    let correction = ComplexMatrix::from_rows(
        2,
        &[c(scale * (bw / nf).exp(), 0.), c(0., 0.), c(0., 0.), c(-scale, 0.)],
    )
    .expect("finite");
    Ok(pauli_z().scale_re(p.omega0 / 2.0).add(&correction))
}

/// The temperature factor `S1` of the second-order correction.
pub fn perturbative_s1(p: &CentralSpinParams) -> f64 {
    let nf = p.n_bath as f64;
    let bw = p.beta * p.omega;
    let numerator = (nf + 2.0) * (bw / 2.0).sinh() - nf * (bw * (nf + 2.0) / (2.0 * nf)).sinh();
    let denominator = (bw * (nf + 1.0) / (2.0 * nf)).sinh() * ((bw / nf).exp() - 1.0).powi(2);
    -(bw / (2.0 * nf)).exp() * numerator / denominator
}

/// The central-spin dynamical map family: `phi11 = alpha_t`,
/// `phi44 = 1 - eta_t`, `phi22 = delta_t`, with the analytic derivative
/// assembled from `alpha_dot`, `eta_dot`, `delta_dot`.
#[derive(Debug, Clone)]
pub struct CentralSpinMapFamily {
    pub params: CentralSpinParams,
}

impl MapFamily for CentralSpinMapFamily {
    fn map_at(&self, t: f64) -> TlsMap {
        let pr = propagators(&self.params, t);
        TlsMap::phase_covariant(pr.alpha, pr.eta, pr.delta)
    }

    fn derivative_at(&self, t: f64) -> Option<ComplexMatrix> {
        let pr = propagators(&self.params, t);
        let zero = c(0., 0.);
        Some(
            ComplexMatrix::from_rows(
                4,
                &[
                    c(pr.alpha_dot, 0.), zero, zero, c(pr.eta_dot, 0.),
                    zero, pr.delta_dot, zero, zero,
                    zero, zero, pr.delta_dot.conj(), zero,
                    c(-pr.alpha_dot, 0.), zero, zero, c(-pr.eta_dot, 0.),
                ],
            )
            .expect("finite entries"),
        )
    }
}

/// Propagate the exact master equation over a grid with the shared RK4
/// stepper, evaluating the closed-form canonical decomposition at each
/// substep.
pub fn propagate_cs(
    p: &CentralSpinParams,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    substeps: usize,
) -> Result<Vec<ComplexMatrix>, CsError> {
    let params = p.clone();
    crate::tlsmap::propagate_master_equation(
        move |t| {
            let r = rates_from_propagators(&propagators(&params, t), t)
                .map_err(|e| MapError::SingularMap { t, det_abs: singularity_size(&e) })?;
            Ok(crate::tlsmap::GeneratorDecomposition {
                h_can: pauli_z().scale_re(-r.theta.im / 2.0),
                jumps: vec![
                    (r.nu_plus, sigma_plus()),
                    (r.nu_minus, sigma_minus()),
                    (r.nu_z, pauli_z()),
                ],
            })
        },
        rho0,
        t_grid,
        if substeps == 0 { DEFAULT_SUBSTEPS } else { substeps },
    )
    .map_err(CsError::Map)
}

fn singularity_size(e: &CsError) -> f64 {
    match e {
        CsError::DegenerateRates { gap, .. } => *gap,
        CsError::SingularCoherence { modulus, .. } => *modulus,
        _ => 0.0,
    }
}

/// Instants in `[0, t_max]` where the generator diverges: zero crossings of
/// `alpha - eta` (the map loses invertibility on the population sector)
/// located by bisection, plus any grid point where the coherence propagator
/// collapses. At the `fig1` preset parameters several such crossings
/// occur within `t in [0, 10]`.
pub fn singular_times(p: &CentralSpinParams, t_max: f64) -> Vec<f64> {
    let steps = 4000;
    let dt = t_max / steps as f64;
    let mut out: Vec<f64> = Vec::new();
    let push_unique = |out: &mut Vec<f64>, t: f64| {
        if out.iter().all(|s| (s - t).abs() > dt) {
            out.push(t);
        }
    };
    let mut prev_t = 0.0_f64;
    let mut prev = {
        let pr = propagators(p, 0.0);
        pr.alpha - pr.eta
    };
    for k in 1..=steps {
        let t = k as f64 * dt;
        let pr = propagators(p, t);
        let gap = pr.alpha - pr.eta;
        if pr.delta.norm() < 1e-7 {
            push_unique(&mut out, t);
        }
        if prev * gap < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_t, t, prev);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let pm = propagators(p, mid);
                let fmid = pm.alpha - pm.eta;
                if flo * fmid <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fmid;
                }
            }
            push_unique(&mut out, 0.5 * (lo + hi));
        } else if gap.abs() < 1e-6 {
            // Tangential near-touch without a sign change still blows up the
            // rates; treat it as singular.
            push_unique(&mut out, t);
        }
        prev_t = t;
        prev = gap;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Propagate the exact master equation across `[0, t_max]`, stepping around
/// the generator poles at the `alpha = eta` crossings (see
/// [`crate::tlsmap::propagate_master_equation_guarded`]). Grid points inside
/// an excluded window of half-width `window` come back as `None`.
pub fn propagate_cs_guarded(
    p: &CentralSpinParams,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    substeps_per_unit_time: f64,
    window: f64,
) -> Result<crate::tlsmap::GuardedTrajectory, CsError> {
    let t_max = *t_grid.last().ok_or(CsError::Map(MapError::BadTimeGrid))?;
    let poles = singular_times(p, t_max);
    let params = p.clone();
    let params_anchor = p.clone();
    let rho_anchor = rho0.clone();
    crate::tlsmap::propagate_master_equation_guarded(
        move |t| {
            let r = rates_from_propagators(&propagators(&params, t), t)
                .map_err(|e| MapError::SingularMap { t, det_abs: singularity_size(&e) })?;
            Ok(crate::tlsmap::GeneratorDecomposition {
                h_can: pauli_z().scale_re(-r.theta.im / 2.0),
                jumps: vec![
                    (r.nu_plus, sigma_plus()),
                    (r.nu_minus, sigma_minus()),
                    (r.nu_z, pauli_z()),
                ],
            })
        },
        move |t| {
            exact_state(&params_anchor, &rho_anchor, t)
                .map_err(|_| MapError::SingularMap { t, det_abs: 0.0 })
        },
        &poles,
        window,
        rho0,
        t_grid,
        substeps_per_unit_time,
    )
    .map_err(CsError::Map)
}
