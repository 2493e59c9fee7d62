use crate::decompose::fill::kernel_basis;
use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix};
use crate::quantum::{AdaptiveSequence, Instrument, Operation, Povm, StochasticMatrix, Validate};

/// Lüders instrument of `B = A nu` followed by conditional POVMs `C^j`.
#[derive(Debug, Clone)]
pub struct PovmTwoStep {
    pub initial: Instrument,
    /// `conditionals[j]` is measured after initial outcome `j`.
    pub conditionals: Vec<Povm>,
}

impl PovmTwoStep {
    /// `sum_j sqrt(B_j) C^j_k sqrt(B_j)` for every `k`.
    pub fn recompose(&self) -> Result<Povm> {
        let dim = self.initial.dim_in();
        let outcomes = self.conditionals[0].outcomes().to_vec();
        let mut effects = vec![linalg::zeros(dim, dim); outcomes.len()];
        for (op, c) in self.initial.operations().iter().zip(&self.conditionals) {
            for (k, ck) in c.effects().iter().enumerate() {
                for kraus in op.kraus() {
                    effects[k] += kraus.adjoint() * ck * kraus;
                }
            }
        }
        Povm::new(outcomes, effects)
    }

    /// The Lüders step followed by measure-and-discard instruments.
    pub fn to_asi(&self, tol: f64) -> Result<AdaptiveSequence> {
        let second = self
            .conditionals
            .iter()
            .map(|c| measurement_instrument(c, tol))
            .collect::<Result<Vec<_>>>()?;
        AdaptiveSequence::new(vec![vec![self.initial.clone()], second])
    }
}

/// Instrument onto a one-dimensional output whose effects are the POVM's:
/// Kraus operators `sqrt(lambda_i) <v_i|` from each effect's spectrum.
pub fn measurement_instrument(a: &Povm, tol: f64) -> Result<Instrument> {
    let ops = a
        .effects()
        .iter()
        .map(|e| {
            let spec = linalg::spectral_decomposition(e, tol)?;
            let kraus = (0..spec.rank())
                .map(|i| ComplexMatrix::from_fn(1, spec.dim(), |_, c| spec.vectors[(c, i)].conj()) * r(spec.values[i].sqrt()))
                .collect();
            Operation::new(a.dim(), 1, kraus)
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_operations(a.outcomes().to_vec(), ops)
}

/// `C^j_k = B_j^{-1/2} nu_kj A_k B_j^{-1/2} + C'^j_k`, with the whole
/// complement `I - Pi_j` placed on the first `k` with `nu_kj > 0`.
pub fn povm_two_step(a: &Povm, nu: &StochasticMatrix, tol: f64) -> Result<PovmTwoStep> {
    if nu.rows() != a.outcomes() {
        return Err(Error::OutcomeMismatch(format!(
            "postprocessing rows {:?} do not match POVM outcomes {:?}",
            nu.rows(),
            a.outcomes()
        )));
    }
    if let Some(v) = nu.validate(tol).into_iter().next() {
        return Err(Error::InvalidPostprocessing(v.to_string()));
    }
    let b = a.postprocess(nu)?;
    let initial = Instrument::luders(&b)?;
    let mut conditionals = Vec::with_capacity(b.len());
    for (j, bj) in b.effects().iter().enumerate() {
        let inv_root = linalg::matrix_power(bj, -0.5, tol)?;
        let q = kernel_basis(bj, tol)?;
        let complement = &q * q.adjoint();
        let anchor = (0..a.len()).find(|&k| nu.is_positive(k, j)).unwrap_or(0);
        let effects = a
            .effects()
            .iter()
            .enumerate()
            .map(|(k, ak)| {
                let mut c = &inv_root * ak * &inv_root * r(nu.get(k, j));
                if k == anchor {
                    c += &complement;
                }
                c
            })
            .collect();
        conditionals.push(Povm::new(a.outcomes().to_vec(), effects)?);
    }
    Ok(PovmTwoStep { initial, conditionals })
}
