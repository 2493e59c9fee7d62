//! Dense complex linear algebra: Hermitian spectral decompositions, SVD,
//! operator powers with the Moore-Penrose convention, support projectors and
//! the closed-form qubit (Pauli basis) power.
//!
//! A value is treated as zero iff it is `<= tol * largest`, where `largest` is
//! the largest eigenvalue magnitude (or singular value) of the same matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Default relative rank cutoff.
pub const DEFAULT_TOL: f64 = 1e-9;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NegativeEigenvalue(f64),
    #[error("expected a 2x2 matrix, got {rows}x{cols}")]
    NotQubit { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigensolver did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from real row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| r(entries[i * cols + j]))
}

/// Diagonal matrix with real entries.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { C64::default() })
}

/// `|i><j|` in dimension `rows x cols`.
pub fn ket_bra(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(rows, cols);
    m[(i, j)] = r(1.0);
    m
}

pub fn sigma_x() -> ComplexMatrix {
    from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)])
}

pub fn sigma_z() -> ComplexMatrix {
    from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// `alpha I + n . sigma`
pub fn pauli_combination(alpha: f64, n: [f64; 3]) -> ComplexMatrix {
    identity(2) * r(alpha) + sigma_x() * r(n[0]) + sigma_y() * r(n[1]) + sigma_z() * r(n[2])
}

/// Splits a 2x2 Hermitian matrix into `(alpha, n)` with `H = alpha I + n . sigma`.
pub fn pauli_coefficients(h: &ComplexMatrix) -> (f64, [f64; 3]) {
    let alpha = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let nz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    (alpha, [off.re, -off.im, nz])
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest absolute entry of `H - H^dagger`.
pub fn hermitian_residual(h: &ComplexMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(h - h.adjoint()))
}

fn check_hermitian(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    if !is_finite(h) {
        return Err(LinalgError::NonFinite);
    }
    let residual = hermitian_residual(h);
    if residual > tol * max_abs(h).max(1.0) {
        return Err(LinalgError::NotHermitian(residual));
    }
    Ok((h + h.adjoint()) * r(0.5))
}

/// Operator (spectral) norm of a Hermitian matrix, i.e. its largest |eigenvalue|.
pub fn hermitian_norm(h: &ComplexMatrix) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let sym = (h + h.adjoint()) * r(0.5);
    match SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER) {
        Some(eig) => eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        None => f64::NAN,
    }
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
    /// Eigenvalues with magnitude at or below this are numerically zero.
    pub cutoff: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_numerically_zero(&self, i: usize) -> bool {
        self.values[i].abs() <= self.cutoff
    }

    /// Number of eigenvalues strictly above the cutoff.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|v| **v > self.cutoff).count()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Eigenvectors with eigenvalue above the cutoff, as columns.
    pub fn retained_vectors(&self) -> ComplexMatrix {
        let k = self.rank();
        self.vectors.columns(0, k).into_owned()
    }

    /// `V f(Lambda) V^dagger` over the retained eigenvalues.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = zeros(n, n);
        for (i, &lambda) in self.values.iter().enumerate() {
            if lambda <= self.cutoff {
                continue;
            }
            let v = self.vectors.column(i);
            out += (&v * v.adjoint()) * r(f(lambda));
        }
        out
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Each eigenvector's phase is fixed so that its largest-magnitude component
/// is real and positive.
pub fn spectral_decomposition(h: &ComplexMatrix, tol: f64) -> Result<Spectrum> {
    let sym = check_hermitian(h, tol)?;
    let n = sym.nrows();
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            vectors: zeros(0, 0),
            cutoff: 0.0,
        });
    }
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(LinalgError::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = fix_phase(eig.eigenvectors.column(src).into_owned());
        vectors.set_column(dst, &col);
    }
    let largest = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(Spectrum {
        values,
        vectors,
        cutoff: tol * largest,
    })
}

fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // strictly larger (with slack) so that near-ties resolve to the lowest index
        if z.norm() > best_mag + 1e-12 {
            best = i;
            best_mag = z.norm();
        }
    }
    if best_mag > 0.0 {
        let phase = v[best].conj() / v[best].norm();
        v *= phase;
    }
    v
}

fn check_psd(spec: &Spectrum) -> Result<()> {
    let min = spec.min();
    if min < -spec.cutoff {
        return Err(LinalgError::NegativeEigenvalue(min));
    }
    Ok(())
}

/// `H^gamma` for Hermitian PSD `H`, applied only on eigenvalues above the
/// cutoff (so negative `gamma` yields the Moore-Penrose pseudo-inverse power
/// and `gamma = 0` yields the support projector).
pub fn matrix_power(h: &ComplexMatrix, gamma: f64, tol: f64) -> Result<ComplexMatrix> {
    let spec = spectral_decomposition(h, tol)?;
    check_psd(&spec)?;
    if gamma == 0.0 {
        return Ok(spec.reassemble(|_| 1.0));
    }
    Ok(spec.reassemble(|lambda| lambda.powf(gamma)))
}

/// Orthogonal projector onto the support (range) of a PSD matrix.
pub fn support_projector(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let spec = spectral_decomposition(h, tol)?;
    check_psd(&spec)?;
    Ok(spec.reassemble(|_| 1.0))
}

/// Closed-form power of a 2x2 Hermitian PSD matrix written as
/// `alpha I + beta (n . sigma)`, whose eigenvalues are `alpha +- beta`.
pub fn pauli_power(h: &ComplexMatrix, gamma: f64) -> Result<ComplexMatrix> {
    if h.nrows() != 2 || h.ncols() != 2 {
        return Err(LinalgError::NotQubit {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let h = check_hermitian(h, DEFAULT_TOL)?;
    let (alpha, n) = pauli_coefficients(&h);
    let beta = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let plus = alpha + beta;
    let minus = alpha - beta;
    let cutoff = DEFAULT_TOL * plus.abs().max(minus.abs());
    if minus < -cutoff {
        return Err(LinalgError::NegativeEigenvalue(minus));
    }
    let pow = |lambda: f64| {
        if lambda <= cutoff {
            0.0
        } else if gamma == 0.0 {
            1.0
        } else {
            lambda.powf(gamma)
        }
    };
    let (p_plus, p_minus) = (pow(plus), pow(minus));
    if beta <= cutoff {
        return Ok(identity(2) * r(pow(alpha)));
    }
    let unit = [n[0] / beta, n[1] / beta, n[2] / beta];
    let half_diff = 0.5 * (p_plus - p_minus);
    Ok(pauli_combination(
        0.5 * (p_plus + p_minus),
        [half_diff * unit[0], half_diff * unit[1], half_diff * unit[2]],
    ))
}

/// Thin singular value decomposition `T = left diag(values) right^dagger`
/// keeping only singular values above `tol * largest`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors `|f_v>` as columns (rows(T) x rank).
    pub left: ComplexMatrix,
    pub values: Vec<f64>,
    /// Right singular vectors `|e_v>` as columns (cols(T) x rank).
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut out = zeros(self.left.nrows(), self.right.nrows());
        for (v, &s) in self.values.iter().enumerate() {
            out += (self.left.column(v) * self.right.column(v).adjoint()) * r(s);
        }
        out
    }
}

pub fn svd(t: &ComplexMatrix, tol: f64) -> Svd {
    let (m, n) = t.shape();
    if m == 0 || n == 0 || max_abs(t) == 0.0 {
        return Svd {
            left: zeros(m, 0),
            values: vec![],
            right: zeros(n, 0),
        };
    }
    let dec = t.clone().svd(true, true);
    let u = dec.u.expect("left vectors requested");
    let v = dec.v_t.expect("right vectors requested").adjoint();
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let largest = dec.singular_values[order[0]];
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| dec.singular_values[i] > tol * largest)
        .collect();
    let mut left = zeros(m, kept.len());
    let mut right = zeros(n, kept.len());
    let mut values = Vec::with_capacity(kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v.column(src));
        values.push(dec.singular_values[src]);
    }
    Svd { left, values, right }
}

/// Numerical rank: number of singular values above `tol * largest`.
pub fn rank(t: &ComplexMatrix, tol: f64) -> usize {
    svd(t, tol).rank()
}

/// Extends orthonormal columns `partial` (n x k) to an n x n unitary by
/// Gram-Schmidt over the standard basis vectors in index order.
pub fn complete_basis(partial: &ComplexMatrix) -> ComplexMatrix {
    let n = partial.nrows();
    let mut cols: Vec<DVector<C64>> = partial.column_iter().map(|c| c.into_owned()).collect();
    for idx in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::<C64>::zeros(n);
        v[idx] = r(1.0);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / r(norm));
        }
    }
    let mut out = zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        out.set_column(j, col);
    }
    out
}

/// Row-major flattening of a matrix into a column vector.
pub fn vectorize(m: &ComplexMatrix) -> DVector<C64> {
    let (rows, cols) = m.shape();
    DVector::from_fn(rows * cols, |idx, _| m[(idx / cols, idx % cols)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &DVector<C64>, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}
