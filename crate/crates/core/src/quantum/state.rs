use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

/// Density matrix: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix, tol: f64) -> Result<Self> {
        let spec = linalg::spectral_decomposition(&rho, tol)?;
        if spec.min() < -tol.max(spec.cutoff) {
            return Err(Error::Invalid(format!("state has negative eigenvalue {}", spec.min())));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > tol.max(1e-12) * rho.nrows() as f64 || trace.im.abs() > tol {
            return Err(Error::Invalid(format!("state has trace {trace}")));
        }
        Ok(Self(rho))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(linalg::identity(dim) / linalg::r(dim as f64))
    }

    /// Pure state `|i><i|` of the standard basis.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self(linalg::ket_bra(dim, dim, i, i))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}
