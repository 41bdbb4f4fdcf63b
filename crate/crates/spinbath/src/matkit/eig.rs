//! Hermitian eigendecomposition through cyclic complex Jacobi rotations.
//!
//! The spectra needed here are small (4x4 superoperator Chois, finite-bath
//! Hamiltonians of dimension `2(N+1)`), so a dependency-free Jacobi sweep is
//! accurate and fast enough. Eigenvector phases and degenerate clusters are
//! fixed deterministically so that pseudo-Kraus operators are reproducible
//! across runs and platforms.

use num_complex::Complex64;

use super::{ComplexMatrix, MatError, DEFAULT_TOL};

/// Spectral decomposition of a Hermitian matrix: eigenvalues ascending,
/// eigenvectors as orthonormal columns of a unitary matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose `k`-th column is the eigenvector of
    /// `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// Column `k` as a vector.
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        let v = &self.eigenvectors;
        (0..v.dim()).map(|i| v[(i, k)]).collect()
    }

    /// `max |M - V diag(lambda) V^dag|` against the given matrix.
    pub fn reconstruction_error(&self, m: &ComplexMatrix) -> f64 {
        let dim = m.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            for i in 0..dim {
                scaled[(i, k)] *= lam;
            }
        }
        scaled.mul(&v.dagger()).max_abs_diff(m)
    }
}

/// Eigendecomposition of a Hermitian matrix, rejecting inputs whose
/// Hermiticity defect exceeds [`DEFAULT_TOL`].
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Spectrum, MatError> {
    hermitian_eig_with_tol(m, DEFAULT_TOL)
}

/// Same as [`hermitian_eig`] with a caller-chosen Hermiticity tolerance.
pub fn hermitian_eig_with_tol(m: &ComplexMatrix, tol: f64) -> Result<Spectrum, MatError> {
    let dev = m.max_abs_diff(&m.dagger());
    if dev > tol {
        return Err(MatError::NotHermitian { max_dev: dev });
    }
    m.check_finite()?;
    let dim = m.dim();
    // Work on the exactly Hermitian part so rounding in the input cannot leak
    // imaginary diagonal entries into the rotations.
    let mut a = m.add(&m.dagger()).scale_re(0.5);
    let mut v = ComplexMatrix::identity(dim);

    let scale = a.max_abs().max(1e-300);
    let stop = 1e-15 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..dim {
            for q in p + 1..dim {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut eigenvalues: Vec<f64> = (0..dim).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::from_fn(dim, |i, k| v[(i, order[k])]);

    canonicalize_degenerate_clusters(&eigenvalues, &mut vectors);
    fix_phases(&mut vectors);

    Ok(Spectrum { eigenvalues, eigenvectors: vectors })
}

/// One complex Jacobi rotation annihilating `a[(p, q)]`, accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let h = a[(p, q)];
    let habs = h.norm();
    if habs < 1e-300 {
        return;
    }
    let phase = h / habs;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // tan(2 theta) = 2|h| / (app - aqq), stable small-angle root.
    let tau = (app - aqq) / (2.0 * habs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cth = 1.0 / (1.0 + t * t).sqrt();
    let sth = t * cth;
    let dim = a.dim();

    // Columns of U: U[p,p]=c, U[p,q]=-s e^{i phi}, U[q,p]=s e^{-i phi}, U[q,q]=c
    // with e^{i phi} = h/|h|; then A <- U^dag A U, V <- V U.
    let s_phase = phase * sth;
    for r in 0..dim {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        a[(r, p)] = arp * cth + arq * s_phase.conj();
        a[(r, q)] = -arp * s_phase + arq * cth;
        a[(p, r)] = a[(r, p)].conj();
        a[(q, r)] = a[(r, q)].conj();
    }
    let new_pp = app * cth * cth + aqq * sth * sth + 2.0 * cth * sth * habs;
    let new_qq = app * sth * sth + aqq * cth * cth - 2.0 * cth * sth * habs;
    a[(p, p)] = Complex64::new(new_pp, 0.0);
    a[(q, q)] = Complex64::new(new_qq, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    for i in 0..dim {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * cth + viq * s_phase.conj();
        v[(i, q)] = -vip * s_phase + viq * cth;
    }
}

/// Within clusters of eigenvalues closer than `1e-9`, reorder the columns by
/// lexicographic comparison of their component moduli and re-orthonormalize.
/// Spectra in this crate are generically nondegenerate; this is deterministic
/// tie-breaking for the exceptional points (e.g. the doubly-zero Choi
/// eigenvalues of pure dephasing).
fn canonicalize_degenerate_clusters(eigenvalues: &[f64], vectors: &mut ComplexMatrix) {
    let dim = eigenvalues.len();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && (eigenvalues[end] - eigenvalues[end - 1]).abs() < 1e-9 {
            end += 1;
        }
        if end - start > 1 {
            let mut cols: Vec<Vec<Complex64>> = (start..end)
                .map(|k| (0..dim).map(|i| vectors[(i, k)]).collect())
                .collect();
            cols.sort_by(|u, w| {
                for (a, b) in u.iter().zip(w.iter()) {
                    match a.norm().total_cmp(&b.norm()) {
                        std::cmp::Ordering::Equal => continue,
                        other => return other,
                    }
                }
                std::cmp::Ordering::Equal
            });
            // Modified Gram-Schmidt inside the cluster; the columns span the
            // same degenerate subspace, so this only cleans rounding.
            for j in 0..cols.len() {
                for i in 0..j {
                    let proj: Complex64 = cols[i]
                        .iter()
                        .zip(cols[j].iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let prev = cols[i].clone();
                    for (cj, pi) in cols[j].iter_mut().zip(prev.iter()) {
                        *cj -= proj * pi;
                    }
                }
                let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for z in cols[j].iter_mut() {
                        *z /= norm;
                    }
                }
            }
            for (offset, col) in cols.iter().enumerate() {
                for i in 0..dim {
                    vectors[(i, start + offset)] = col[i];
                }
            }
        }
        start = end;
    }
}

/// Rotate each column so its first component of largest modulus is real and
/// nonnegative.
fn fix_phases(vectors: &mut ComplexMatrix) {
    let dim = vectors.dim();
    for k in 0..dim {
        let mut best = 0;
        let mut best_norm = -1.0;
        for i in 0..dim {
            let n = vectors[(i, k)].norm();
            if n > best_norm {
                best_norm = n;
                best = i;
            }
        }
        if best_norm <= 0.0 {
            continue;
        }
        let phase = vectors[(best, k)] / best_norm;
        let correction = phase.conj();
        for i in 0..dim {
            vectors[(i, k)] *= correction;
        }
    }
}
