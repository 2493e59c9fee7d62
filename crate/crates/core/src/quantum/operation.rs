use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix, C64};

/// A completely positive map given by a list of Kraus operators of shape
/// `dim_out x dim_in`. An empty list is the zero operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl Operation {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::DimensionMismatch("dimensions must be positive".into()));
        }
        for (m, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {m} has shape {:?}, expected ({dim_out}, {dim_in})",
                    k.shape()
                )));
            }
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            kraus: vec![],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![linalg::identity(dim)],
        }
    }

    pub fn single(kraus: ComplexMatrix) -> Self {
        Self {
            dim_in: kraus.ncols(),
            dim_out: kraus.nrows(),
            kraus: vec![kraus],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<ComplexMatrix> {
        self.kraus
    }

    /// `sum_m K_m^dagger K_m`, the effect this operation induces on the input.
    pub fn effect(&self) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(linalg::zeros(self.dim_in, self.dim_in), |acc, k| acc + k.adjoint() * k)
    }

    /// Applies the operation to `rho`, returning the unnormalized output and its trace.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        if rho.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "state has shape {:?}, operation expects {}",
                rho.shape(),
                self.dim_in
            )));
        }
        let out = self
            .kraus
            .iter()
            .fold(linalg::zeros(self.dim_out, self.dim_out), |acc, k| acc + k * rho * k.adjoint());
        let p = out.trace().re;
        Ok((out, p))
    }

    /// Unnormalized Choi matrix `sum_ab N(|a><b|) (x) |a><b|`, of size
    /// `dim_out * dim_in` with output index major.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim_in * self.dim_out;
        let mut out = linalg::zeros(n, n);
        for k in &self.kraus {
            let v = linalg::vectorize(k);
            out += &v * v.adjoint();
        }
        out
    }

    /// Kraus rank, the rank of the Choi matrix.
    pub fn kraus_rank(&self, tol: f64) -> usize {
        if self.kraus.is_empty() {
            return 0;
        }
        linalg::rank(&self.stacked(), tol)
    }

    fn stacked(&self) -> ComplexMatrix {
        let n = self.dim_in * self.dim_out;
        let mut w = linalg::zeros(n, self.kraus.len());
        for (m, k) in self.kraus.iter().enumerate() {
            w.set_column(m, &linalg::vectorize(k));
        }
        w
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.kraus.iter().all(|k| linalg::max_abs(k) <= tol)
    }

    /// Minimal Kraus representation. Lists that are already linearly
    /// independent are kept as given; otherwise the Kraus operators are
    /// re-derived from the eigen-decomposition of the Choi matrix.
    pub fn minimal(&self, tol: f64) -> Result<Operation> {
        let rank = self.kraus_rank(tol);
        if rank == self.kraus.len() {
            return Ok(self.clone());
        }
        Self::from_choi(&self.choi(), self.dim_in, self.dim_out, tol)
    }

    /// Kraus operators `sqrt(lambda) unvec(v)` from the retained Choi eigenpairs.
    pub fn from_choi(choi: &ComplexMatrix, dim_in: usize, dim_out: usize, tol: f64) -> Result<Operation> {
        if choi.shape() != (dim_in * dim_out, dim_in * dim_out) {
            return Err(Error::DimensionMismatch("Choi matrix size".into()));
        }
        let spec = linalg::spectral_decomposition(choi, tol)?;
        let mut kraus = Vec::new();
        for (i, &lambda) in spec.values.iter().enumerate() {
            if lambda <= spec.cutoff {
                break;
            }
            let v: DVector<C64> = spec.vectors.column(i).into_owned() * r(lambda.sqrt());
            kraus.push(linalg::unvectorize(&v, dim_out, dim_in));
        }
        Operation::new(dim_in, dim_out, kraus)
    }

    /// `next . self`: apply `self` first, then `next`.
    pub fn then(&self, next: &Operation) -> Result<Operation> {
        if self.dim_out != next.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {} -> {} with {} -> {}",
                self.dim_in, self.dim_out, next.dim_in, next.dim_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for t in &self.kraus {
            for s in &next.kraus {
                kraus.push(s * t);
            }
        }
        Operation::new(self.dim_in, next.dim_out, kraus)
    }

    /// Adds another operation by concatenating Kraus lists.
    pub fn plus(&self, other: &Operation) -> Result<Operation> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return Err(Error::DimensionMismatch("cannot add operations of different shapes".into()));
        }
        let mut kraus = self.kraus.clone();
        kraus.extend(other.kraus.iter().cloned());
        Operation::new(self.dim_in, self.dim_out, kraus)
    }
}

/// Frobenius distance between Choi matrices.
pub fn choi_distance(a: &Operation, b: &Operation) -> Result<f64> {
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out) {
        return Err(Error::DimensionMismatch(format!(
            "operations {}->{} and {}->{}",
            a.dim_in, a.dim_out, b.dim_in, b.dim_out
        )));
    }
    Ok((a.choi() - b.choi()).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ket_bra, DEFAULT_TOL};
    use crate::random::{random_matrix, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_channel_choi_is_unnormalized_bell_projector() {
        let choi = Operation::identity(2).choi();
        let mut expected = linalg::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(i, j)] = r(1.0);
        }
        assert!((choi - expected).norm() < 1e-15);
    }

    #[test]
    fn unitary_mixing_leaves_choi_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let kraus: Vec<_> = (0..3).map(|_| random_matrix(&mut rng, 2, 3)).collect();
        let u = random_unitary(&mut rng, 3);
        let mixed: Vec<_> = (0..3)
            .map(|i| (0..3).fold(linalg::zeros(2, 3), |acc, m| acc + &kraus[m] * u[(i, m)]))
            .collect();
        let a = Operation::new(3, 2, kraus).unwrap();
        let b = Operation::new(3, 2, mixed).unwrap();
        assert!(choi_distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn minimal_compresses_redundant_kraus() {
        let k = ket_bra(2, 2, 0, 0);
        let op = Operation::new(2, 2, vec![k.clone() * r(0.6), k * r(0.8)]).unwrap();
        assert_eq!(op.kraus_rank(DEFAULT_TOL), 1);
        let m = op.minimal(DEFAULT_TOL).unwrap();
        assert_eq!(m.kraus().len(), 1);
        assert!(choi_distance(&op, &m).unwrap() < 1e-12);
    }

    #[test]
    fn apply_and_compose() {
        let rho = linalg::diag(&[0.25, 0.75]);
        let (out, p) = Operation::identity(2).apply(&rho).unwrap();
        assert!((out - &rho).norm() < 1e-15 && (p - 1.0).abs() < 1e-15);
        let x = linalg::sigma_x();
        let op = Operation::single(x.clone()).then(&Operation::single(x)).unwrap();
        assert!(choi_distance(&op, &Operation::identity(2)).unwrap() < 1e-14);
        assert!(Operation::identity(2).then(&Operation::identity(3)).is_err());
        let bad = ComplexMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(Operation::new(3, 2, vec![bad]).is_err());
    }
}
