use crate::decompose::fill::{kernel_basis, Draft};
use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix, C64};
use crate::quantum::{AdaptiveSequence, Instrument, Operation, StochasticMatrix, Validate};

/// Weights `c_{k,jm}` of the isometric complement terms (growing case).
#[derive(Debug, Clone, Default, PartialEq)]
pub enum PathWeights {
    /// All weight on the first `(k, m)` with `nu_kj > 0`.
    #[default]
    FirstPositive,
    /// Explicit weights indexed `[j][k][m]`, `m` running over the minimal
    /// Kraus operators of `T_k`. Each `j` must have unit squared norm.
    Explicit(Vec<Vec<Vec<C64>>>),
}

/// Initial instrument plus one residual instrument per initial outcome.
#[derive(Debug, Clone)]
pub struct TwoStepDecomposition {
    pub initial: Instrument,
    /// `residuals[j]` follows initial outcome `j`.
    pub residuals: Vec<Instrument>,
    pub postproc: StochasticMatrix,
    /// Auxiliary Kraus operators added per residual instrument.
    pub additional_kraus: Vec<usize>,
}

impl TwoStepDecomposition {
    pub fn intermediate_dim(&self) -> usize {
        self.initial.dim_out()
    }

    pub fn to_asi(&self) -> AdaptiveSequence {
        AdaptiveSequence::new(vec![vec![self.initial.clone()], self.residuals.clone()])
            .expect("decomposition steps chain by construction")
    }

    /// `sum_j R^j_k . J_j` for every final outcome `k`.
    pub fn recompose(&self, tol: f64) -> Result<Instrument> {
        let first = &self.residuals[0];
        let mut ops = Vec::with_capacity(first.len());
        for k in 0..first.len() {
            let mut acc = Operation::zero(self.initial.dim_in(), first.dim_out());
            for j in 0..self.initial.len() {
                acc = acc.plus(&self.branch(j, k)?)?;
            }
            ops.push(acc.minimal(tol)?);
        }
        Instrument::from_operations(first.outcomes().to_vec(), ops)
    }

    /// `R^j_k . J_j`.
    pub fn branch(&self, j: usize, k: usize) -> Result<Operation> {
        self.initial.operations()[j].then(&self.residuals[j].operations()[k])
    }
}

pub(crate) fn check_postproc(t: &Instrument, nu: &StochasticMatrix, tol: f64) -> Result<()> {
    if nu.rows() != t.outcomes() {
        return Err(Error::OutcomeMismatch(format!(
            "postprocessing rows {:?} do not match instrument outcomes {:?}",
            nu.rows(),
            t.outcomes()
        )));
    }
    if let Some(v) = nu.validate(tol).into_iter().next() {
        return Err(Error::InvalidPostprocessing(v.to_string()));
    }
    Ok(())
}

/// Kraus operators `T_{k,jm} = sqrt(nu_kj) T'_{k,m}` of branch `j`.
fn branch_kraus(t: &Instrument, nu: &StochasticMatrix, j: usize) -> Vec<Vec<ComplexMatrix>> {
    t.operations()
        .iter()
        .enumerate()
        .map(|(k, op)| {
            if nu.is_positive(k, j) {
                let s = r(nu.get(k, j).sqrt());
                op.kraus().iter().map(|km| km * s).collect()
            } else {
                vec![]
            }
        })
        .collect()
}

fn check_support(kraus: &[Vec<ComplexMatrix>], pi: &ComplexMatrix) -> Result<()> {
    for ks in kraus {
        for t in ks {
            let defect = (t * pi - t).norm();
            if defect > 1e-6 * t.norm().max(1.0) {
                return Err(Error::Invalid(format!(
                    "Kraus operator leaves the support of its initial effect by {defect:.3e}"
                )));
            }
        }
    }
    Ok(())
}

fn live(nu: &StochasticMatrix, j: usize) -> Vec<bool> {
    (0..nu.rows().len()).map(|k| nu.is_positive(k, j)).collect()
}

fn build_residual(t: &Instrument, draft: Draft) -> Result<Instrument> {
    let ops = draft
        .kraus
        .into_iter()
        .map(|ks| Operation::new(draft.dim_mid, draft.dim_out, ks))
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_operations(t.outcomes().to_vec(), ops)
}

/// Two-step decomposition with the Lüders instrument of `B = A^T nu` first.
pub fn two_step(t: &Instrument, nu: &StochasticMatrix, weights: &PathWeights, tol: f64) -> Result<TwoStepDecomposition> {
    check_postproc(t, nu, tol)?;
    let t = t.minimal(tol)?;
    let b = t.induced_povm().postprocess(nu)?;
    let initial = Instrument::luders(&b)?;
    let (dim_in, dim_out) = (t.dim_in(), t.dim_out());
    if let PathWeights::Explicit(w) = weights {
        if w.len() != b.len() {
            return Err(Error::Invalid(format!("path weights given for {} of {} branches", w.len(), b.len())));
        }
    }
    let mut residuals = Vec::with_capacity(b.len());
    let mut additional = Vec::with_capacity(b.len());
    for (j, bj) in b.effects().iter().enumerate() {
        let inv_root = linalg::matrix_power(bj, -0.5, tol)?;
        let pi = linalg::support_projector(bj, tol)?;
        let tj = branch_kraus(&t, nu, j);
        check_support(&tj, &pi)?;
        let kraus = tj.iter().map(|ks| ks.iter().map(|km| km * &inv_root).collect()).collect();
        let mut draft = Draft {
            kraus,
            sources: tj,
            live: live(nu, j),
            dim_mid: dim_in,
            dim_out,
        };
        let q = kernel_basis(bj, tol)?;
        if dim_in <= dim_out {
            let w = match weights {
                PathWeights::FirstPositive => draft.default_weights(),
                PathWeights::Explicit(all) => all[j].clone(),
            };
            draft.fill_isometric(&q, &w)?;
            additional.push(0);
        } else {
            additional.push(draft.fill_packed(&q, tol));
        }
        residuals.push(build_residual(&t, draft)?);
    }
    Ok(TwoStepDecomposition {
        initial,
        residuals,
        postproc: nu.clone(),
        additional_kraus: additional,
    })
}

/// Auxiliary Kraus operators needed by residual `j` in the shrinking case:
/// zero when the spare image dimensions of the live Kraus operators cover
/// the orthocomplement, otherwise the remaining dimension over `dim_out`,
/// rounded up.
pub fn count_additional_kraus(t: &Instrument, nu: &StochasticMatrix, j: usize, tol: f64) -> Result<usize> {
    check_postproc(t, nu, tol)?;
    if j >= nu.cols().len() {
        return Err(Error::OutcomeMismatch(format!("no postprocessing column {j}")));
    }
    let (dim_in, dim_out) = (t.dim_in(), t.dim_out());
    if dim_in <= dim_out {
        return Ok(0);
    }
    let t = t.minimal(tol)?;
    let b = t.induced_povm().postprocess(nu)?;
    let missing = dim_in - linalg::spectral_decomposition(&b.effects()[j], tol)?.rank();
    let mut spare = 0;
    for (k, op) in t.operations().iter().enumerate() {
        if nu.is_positive(k, j) {
            spare += op.kraus().iter().map(|km| dim_out - linalg::rank(km, tol)).sum::<usize>();
        }
    }
    Ok(if spare >= missing {
        0
    } else {
        (missing - spare).div_ceil(dim_out)
    })
}

/// Two-step decomposition through an intermediate space of dimension
/// `d1 = max_j rank B_j`, which must be smaller than the input dimension.
pub fn two_step_reduced(t: &Instrument, nu: &StochasticMatrix, tol: f64) -> Result<TwoStepDecomposition> {
    check_postproc(t, nu, tol)?;
    let t = t.minimal(tol)?;
    let b = t.induced_povm().postprocess(nu)?;
    let (dim_in, dim_out) = (t.dim_in(), t.dim_out());
    let spectra = b
        .effects()
        .iter()
        .map(|e| linalg::spectral_decomposition(e, tol))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let d1 = spectra.iter().map(|s| s.rank()).max().unwrap_or(0);
    if d1 >= dim_in {
        return Err(Error::Precondition(format!(
            "largest initial effect rank {d1} is not below the input dimension {dim_in}; use the full two-step decomposition"
        )));
    }
    let mut initial_ops = Vec::with_capacity(b.len());
    let mut residuals = Vec::with_capacity(b.len());
    let mut additional = Vec::with_capacity(b.len());
    for (j, (bj, spec)) in b.effects().iter().zip(&spectra).enumerate() {
        let rank = spec.rank();
        // M_j = sum_k |k><v_k|
        let mut mj = linalg::zeros(d1, dim_in);
        for i in 0..rank {
            mj.set_row(i, &spec.vectors.column(i).adjoint());
        }
        let root = linalg::matrix_power(bj, 0.5, tol)?;
        let inv_root = linalg::matrix_power(bj, -0.5, tol)?;
        let pi = linalg::support_projector(bj, tol)?;
        initial_ops.push(if rank == 0 {
            Operation::zero(dim_in, d1)
        } else {
            Operation::single(&mj * root)
        });
        let tj = branch_kraus(&t, nu, j);
        check_support(&tj, &pi)?;
        let mj_dag = mj.adjoint();
        let kraus = tj
            .iter()
            .map(|ks| ks.iter().map(|km| km * &inv_root * &mj_dag).collect())
            .collect();
        let sources = tj.iter().map(|ks| ks.iter().map(|km| km * &mj_dag).collect()).collect();
        let mut draft = Draft {
            kraus,
            sources,
            live: live(nu, j),
            dim_mid: d1,
            dim_out,
        };
        // complement of M_j M_j^dagger inside the intermediate space
        let mut q = linalg::zeros(d1, d1 - rank);
        for i in rank..d1 {
            q[(i, i - rank)] = r(1.0);
        }
        if d1 <= dim_out {
            let w = draft.default_weights();
            draft.fill_isometric(&q, &w)?;
            additional.push(0);
        } else {
            additional.push(draft.fill_packed(&q, tol));
        }
        residuals.push(build_residual(&t, draft)?);
    }
    let initial = Instrument::from_operations(b.outcomes().to_vec(), initial_ops)?;
    Ok(TwoStepDecomposition {
        initial,
        residuals,
        postproc: nu.clone(),
        additional_kraus: additional,
    })
}
