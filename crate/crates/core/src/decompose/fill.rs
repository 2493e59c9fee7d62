//! Completion of residual Kraus operators on the orthocomplement of the
//! initial effect's support.

use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix, C64};

/// Residual Kraus operators of one branch `j`, grouped by final outcome `k`,
/// before the complement is filled in.
pub(crate) struct Draft {
    /// Kraus operators mapping the intermediate space to the output.
    pub kraus: Vec<Vec<ComplexMatrix>>,
    /// Matrices whose SVD bases define the isometries of the growing case.
    pub sources: Vec<Vec<ComplexMatrix>>,
    /// `nu_kj > 0` per outcome.
    pub live: Vec<bool>,
    pub dim_mid: usize,
    pub dim_out: usize,
}

impl Draft {
    /// First outcome allowed to carry auxiliary weight.
    fn anchor(&self) -> usize {
        self.live.iter().position(|&l| l).unwrap_or(0)
    }

    /// Default weights: all weight on the first live `(k, m)`. When no live
    /// outcome has a Kraus operator, a new one is opened on the anchor outcome.
    pub fn default_weights(&self) -> Vec<Vec<C64>> {
        let mut w: Vec<Vec<C64>> = self.kraus.iter().map(|ks| vec![r(0.0); ks.len()]).collect();
        let first = (0..self.kraus.len()).find(|&k| self.live[k] && !self.kraus[k].is_empty());
        match first {
            Some(k) => w[k][0] = r(1.0),
            None => {
                let k = self.anchor();
                w[k].push(r(1.0));
            }
        }
        w
    }

    /// Adds `sum c V (I - Pi)` with `(I - Pi) = q q^dagger` (growing case).
    /// `weights[k]` may be one longer than `kraus[k]`, opening a new operator.
    pub fn fill_isometric(&mut self, q: &ComplexMatrix, weights: &[Vec<C64>]) -> Result<()> {
        if self.dim_mid > self.dim_out {
            return Err(Error::Precondition("isometric fill needs dim_mid <= dim_out".into()));
        }
        if weights.len() != self.kraus.len() {
            return Err(Error::Invalid(format!(
                "path weights cover {} outcomes, expected {}",
                weights.len(),
                self.kraus.len()
            )));
        }
        let total: f64 = weights.iter().flatten().map(|c| c.norm_sqr()).sum();
        if q.ncols() == 0 {
            return Ok(());
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("path weights have squared norm {total}, expected 1")));
        }
        let complement = q * q.adjoint();
        for (k, wk) in weights.iter().enumerate() {
            if wk.len() > self.kraus[k].len() + 1 {
                return Err(Error::Invalid(format!("too many path weights for outcome {k}")));
            }
            for (m, &c) in wk.iter().enumerate() {
                if c.norm() == 0.0 {
                    continue;
                }
                if m == self.kraus[k].len() {
                    self.kraus[k].push(linalg::zeros(self.dim_out, self.dim_mid));
                    self.sources[k].push(linalg::zeros(self.dim_out, self.dim_mid));
                }
                let v = isometry_from_svd(&self.sources[k][m], self.dim_mid);
                self.kraus[k][m] += v * &complement * c;
            }
        }
        Ok(())
    }

    /// Shrinking case: absorbs complement vectors into existing live Kraus
    /// operators with spare image dimensions (largest spare room first), then
    /// packs the remainder into auxiliary operators of at most `dim_out`
    /// vectors each on the anchor outcome. Returns the number of auxiliary
    /// operators.
    pub fn fill_packed(&mut self, q: &ComplexMatrix, tol: f64) -> usize {
        let total = q.ncols();
        if total == 0 {
            return 0;
        }
        let mut slots: Vec<(usize, usize, usize, ComplexMatrix)> = Vec::new();
        for (k, ks) in self.kraus.iter().enumerate() {
            if !self.live[k] {
                continue;
            }
            for (m, kraus) in ks.iter().enumerate() {
                let svd = linalg::svd(kraus, tol);
                let spare = self.dim_out - svd.rank();
                if spare > 0 {
                    let basis = linalg::complete_basis(&svd.left);
                    let free = basis.columns(svd.rank(), spare).into_owned();
                    slots.push((spare, k, m, free));
                }
            }
        }
        // stable: ties keep (k, m) order
        slots.sort_by(|a, b| b.0.cmp(&a.0));
        let mut next = 0;
        for (spare, k, m, free) in slots {
            if next == total {
                break;
            }
            let take = spare.min(total - next);
            for i in 0..take {
                let piece = free.column(i) * q.column(next + i).adjoint();
                self.kraus[k][m] += piece;
            }
            next += take;
        }
        let anchor = self.anchor();
        let mut added = 0;
        while next < total {
            let take = self.dim_out.min(total - next);
            let mut aux = linalg::zeros(self.dim_out, self.dim_mid);
            for i in 0..take {
                aux += linalg::ket_bra(self.dim_out, 1, i, 0) * q.column(next + i).adjoint();
            }
            self.kraus[anchor].push(aux);
            next += take;
            added += 1;
        }
        added
    }
}

/// `V = sum_v |f_v><e_v|` over the first `dim_mid` vectors of the SVD bases
/// of `t`, both completed by Gram-Schmidt over the standard basis.
pub(crate) fn isometry_from_svd(t: &ComplexMatrix, dim_mid: usize) -> ComplexMatrix {
    let svd = linalg::svd(t, linalg::DEFAULT_TOL);
    let f = linalg::complete_basis(&svd.left);
    let e = linalg::complete_basis(&svd.right);
    f.columns(0, dim_mid) * e.adjoint()
}

/// Orthonormal basis (as columns) of the kernel of a PSD matrix.
pub(crate) fn kernel_basis(b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let spec = linalg::spectral_decomposition(b, tol)?;
    let rank = spec.rank();
    Ok(spec.vectors.columns(rank, spec.dim() - rank).into_owned())
}
