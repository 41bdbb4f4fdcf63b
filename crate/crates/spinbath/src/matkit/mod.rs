//! Dense complex linear algebra sized for qubit superoperators and
//! finite-bath references.
//!
//! Everything here is plain double-precision dense algebra: no sparsity, no
//! dimensions beyond a few thousand, and no non-Hermitian eigenproblems (null
//! spaces are found through a Hermitian solve on `A†A`).

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

mod eig;

pub use eig::{hermitian_eig, hermitian_eig_with_tol, Spectrum};

/// Default tolerance for structural predicates (Hermiticity, tracelessness,
/// unitarity). Closed-form double-precision formulas keep residuals well
/// below this.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not Hermitian (max |M - M^dag| = {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },
    #[error("dimension {dim} does not factor as 2 x bath dimension {bath_dim}")]
    BadBathSplit { dim: usize, bath_dim: usize },
    #[error("vectorized qubit operator must have length 4, got {got}")]
    BadVecLength { got: usize },
    #[error("matrix is singular (|pivot| = {pivot:.3e})")]
    Singular { pivot: f64 },
}

/// Dense complex square matrix, the universal carrier for states, maps, and
/// generators. Row-major storage, entries dimensionless unless stated.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: Array2<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self { data: Array2::zeros((dim, dim)) }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major slice of entries. Fails unless `entries` has
    /// `dim * dim` finite values.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self, MatError> {
        if entries.len() != dim * dim {
            return Err(MatError::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        let data = Array2::from_shape_vec((dim, dim), entries.to_vec())
            .expect("shape checked above");
        let m = Self { data };
        m.check_finite()?;
        Ok(m)
    }

    /// Build entry-wise from a closure.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self { data: Array2::from_shape_fn((dim, dim), |(i, j)| f(i, j)) }
    }

    /// Wrap an existing square `ndarray` array.
    pub fn from_array(data: Array2<Complex64>) -> Result<Self, MatError> {
        if data.nrows() != data.ncols() {
            return Err(MatError::NotSquare { rows: data.nrows(), cols: data.ncols() });
        }
        let m = Self { data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn array(&self) -> &Array2<Complex64> {
        &self.data
    }

    fn check_finite(&self) -> Result<(), MatError> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(MatError::NonFinite)
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self { data: self.data.t().mapv(|z| z.conj()) }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diag().sum()
    }

    /// Matrix product.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self { data: self.data.dot(&rhs.data) }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim(), "matrix-vector dimension mismatch");
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { data: &self.data + &rhs.data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { data: &self.data - &rhs.data }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { data: self.data.mapv(|z| z * c) }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation from another matrix.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.sub(rhs).max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn is_traceless(&self, tol: f64) -> bool {
        self.trace().norm() <= tol
    }

    /// `max |U U^dag - I|`, zero for unitary matrices.
    pub fn unitarity_defect(&self) -> f64 {
        self.mul(&self.dagger()).max_abs_diff(&Self::identity(self.dim()))
    }

    /// Hilbert-Schmidt inner product `Tr(self^dag rhs)`.
    pub fn hs_inner(&self, rhs: &Self) -> Complex64 {
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.data[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.data[idx]
    }
}

/// Shorthand for a complex number.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap()
}

/// `sigma_+ = |0><1|`, raising the qubit into its excited state `|0>`.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap()
}

/// `sigma_- = |1><0|`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_rows(2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]).unwrap()
}

/// Column-stacking-free vectorization of a qubit operator:
/// `vec(|j><k|) = |j> (x) |k>`, i.e. `(M00, M01, M10, M11)`.
pub fn vec2(m: &ComplexMatrix) -> Result<[Complex64; 4], MatError> {
    if m.dim() != 2 {
        return Err(MatError::DimensionMismatch { expected: 2, got: m.dim() });
    }
    Ok([m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

/// Inverse of [`vec2`]: `devec(vec(M)) = M` exactly.
pub fn devec2(v: &[Complex64]) -> Result<ComplexMatrix, MatError> {
    if v.len() != 4 {
        return Err(MatError::BadVecLength { got: v.len() });
    }
    ComplexMatrix::from_rows(2, v)
}

/// Kronecker product with `(A (x) B)[(i dB + k), (j dB + l)] = A[i,j] B[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(da * db, |r, cidx| {
        a[(r / db, cidx / db)] * b[(r % db, cidx % db)]
    })
}

/// Unitary `e^{-i H t}` of a Hermitian generator, computed through the
/// spectral decomposition of `H`.
pub fn expm_hermitian_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, MatError> {
    let spec = hermitian_eig(h)?;
    let dim = h.dim();
    let v = spec.eigenvectors();
    // V diag(e^{-i lambda t}) V^dag
    let mut scaled = v.clone();
    for (k, &lam) in spec.eigenvalues().iter().enumerate() {
        let phase = Complex64::new(0.0, -lam * t).exp();
        for i in 0..dim {
            scaled[(i, k)] *= phase;
        }
    }
    Ok(scaled.mul(&v.dagger()))
}

/// Trace out the bath factor of a `2 x d_B`-dimensional operator, with the
/// system in the first tensor slot (`|s> (x) |n>` ordering).
pub fn partial_trace_bath(rho_sb: &ComplexMatrix, bath_dim: usize) -> Result<ComplexMatrix, MatError> {
    if bath_dim == 0 || rho_sb.dim() != 2 * bath_dim {
        return Err(MatError::BadBathSplit { dim: rho_sb.dim(), bath_dim });
    }
    let mut out = ComplexMatrix::zeros(2);
    for s in 0..2 {
        for sp in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..bath_dim {
                acc += rho_sb[(s * bath_dim + n, sp * bath_dim + n)];
            }
            out[(s, sp)] = acc;
        }
    }
    Ok(out)
}

/// Determinant through Gaussian elimination with partial pivoting.
pub fn det(m: &ComplexMatrix) -> Complex64 {
    let n = m.dim();
    let mut a = m.clone();
    let mut result = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        let pivot = a[(pivot_row, col)];
        if pivot.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            result = -result;
        }
        result *= pivot;
        for i in col + 1..n {
            let factor = a[(i, col)] / pivot;
            for j in col..n {
                let sub = factor * a[(col, j)];
                a[(i, j)] -= sub;
            }
        }
    }
    result
}

/// Inverse through Gauss-Jordan elimination with partial pivoting.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix, MatError> {
    let n = m.dim();
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        let pivot = a[(pivot_row, col)];
        if pivot.norm() <= f64::MIN_POSITIVE {
            return Err(MatError::Singular { pivot: pivot.norm() });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot_row, j)];
                inv[(pivot_row, j)] = tmp;
            }
        }
        let pinv = Complex64::new(1.0, 0.0) / pivot;
        for j in 0..n {
            a[(col, j)] *= pinv;
            inv[(col, j)] *= pinv;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = a[(i, col)];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..n {
                let s1 = factor * a[(col, j)];
                a[(i, j)] -= s1;
                let s2 = factor * inv[(col, j)];
                inv[(i, j)] -= s2;
            }
        }
    }
    Ok(inv)
}

/// Orthonormal null-space basis of `A`, from the spectral decomposition of
/// the Hermitian product `A^dag A`. Candidate directions with a small
/// singular value are kept only if the direct residual `|A v|_max` stays
/// below `tol * max(1, |A|_max)`; squaring into the Gram matrix alone would
/// halve the attainable precision.
pub fn null_space(m: &ComplexMatrix, tol: f64) -> Vec<Vec<Complex64>> {
    let gram = m.dagger().mul(m);
    // A^dag A is Hermitian positive semidefinite up to rounding.
    let spec = hermitian_eig_with_tol(&gram, 1e-8 * (1.0 + gram.max_abs()))
        .expect("Gram matrix is Hermitian by construction");
    let scale = 1f64.max(m.max_abs());
    let candidate_sigma = (1e-6 * scale).max(tol * scale);
    let mut basis = Vec::new();
    for (k, &lam) in spec.eigenvalues().iter().enumerate() {
        if lam.max(0.0).sqrt() > candidate_sigma {
            continue;
        }
        let v = spec.eigenvectors();
        let col: Vec<Complex64> = (0..m.dim()).map(|i| v[(i, k)]).collect();
        let residual = m.mul_vec(&col).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual <= tol * scale {
            basis.push(col);
        }
    }
    basis
}
