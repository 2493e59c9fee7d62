use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix};

/// Finite-outcome POVM: one effect per outcome label.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    outcomes: Vec<String>,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(outcomes: Vec<String>, effects: Vec<ComplexMatrix>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != effects.len() {
            return Err(Error::Invalid(format!(
                "{} outcome labels for {} effects",
                outcomes.len(),
                effects.len()
            )));
        }
        check_unique(&outcomes)?;
        let dim = effects[0].nrows();
        if dim == 0 {
            return Err(Error::DimensionMismatch("effects must be non-empty matrices".into()));
        }
        for (label, e) in outcomes.iter().zip(&effects) {
            if e.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "effect {label:?} has shape {:?}, expected ({dim}, {dim})",
                    e.shape()
                )));
            }
        }
        Ok(Self { dim, outcomes, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, label: &str) -> Option<&ComplexMatrix> {
        self.outcomes.iter().position(|o| o == label).map(|i| &self.effects[i])
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Born-rule probabilities `Tr[rho A_i]`.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        if rho.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch("state and POVM dimensions differ".into()));
        }
        Ok(self.effects.iter().map(|e| (rho * e).trace().re).collect())
    }

    /// `B_j = sum_k nu_kj A_k`.
    pub fn postprocess(&self, nu: &StochasticMatrix) -> Result<Povm> {
        if nu.rows() != self.outcomes.as_slice() {
            return Err(Error::OutcomeMismatch(format!(
                "postprocessing rows {:?} do not match POVM outcomes {:?}",
                nu.rows(),
                self.outcomes
            )));
        }
        let effects = (0..nu.cols().len())
            .map(|j| {
                self.effects
                    .iter()
                    .enumerate()
                    .fold(linalg::zeros(self.dim, self.dim), |acc, (k, a)| acc + a * r(nu.get(k, j)))
            })
            .collect();
        Povm::new(nu.cols().to_vec(), effects)
    }
}

pub(crate) fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::Invalid(format!("duplicate outcome label {l:?}")));
        }
    }
    Ok(())
}

/// Row-stochastic matrix `nu_kj` from source outcomes (rows) to target
/// outcomes (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::InvalidPostprocessing("empty label set".into()));
        }
        check_unique(&rows)?;
        check_unique(&cols)?;
        if data.len() != rows.len() || data.iter().any(|row| row.len() != cols.len()) {
            return Err(Error::InvalidPostprocessing(format!(
                "matrix shape does not match {} rows x {} columns",
                rows.len(),
                cols.len()
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPostprocessing("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let data = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(labels.clone(), labels, data)
    }

    /// Single column of ones: every outcome is merged into `label`.
    pub fn trivial(rows: Vec<String>, label: &str) -> Result<Self> {
        let data = rows.iter().map(|_| vec![1.0]).collect();
        Self::new(rows, vec![label.to_string()], data)
    }

    /// 0/1 matrix sending row `k` to column `assignment[k]`.
    pub fn from_assignment(rows: Vec<String>, cols: Vec<String>, assignment: &[usize]) -> Result<Self> {
        if assignment.len() != rows.len() || assignment.iter().any(|&j| j >= cols.len()) {
            return Err(Error::InvalidPostprocessing("assignment out of range".into()));
        }
        let data = assignment
            .iter()
            .map(|&a| (0..cols.len()).map(|j| if j == a { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k][j]
    }

    pub fn is_positive(&self, k: usize, j: usize) -> bool {
        self.data[k][j] > 0.0
    }

    /// Matrix product `self * next`, postprocessing by `self` and then `next`.
    pub fn then(&self, next: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.cols != next.rows {
            return Err(Error::OutcomeMismatch("chained postprocessings do not share labels".into()));
        }
        let data = self
            .data
            .iter()
            .map(|row| {
                (0..next.cols.len())
                    .map(|l| row.iter().enumerate().map(|(j, v)| v * next.data[j][l]).sum())
                    .collect()
            })
            .collect();
        Self::new(self.rows.clone(), next.cols.clone(), data)
    }

    /// 0/1 matrix sending every row to its largest entry (lowest column on ties).
    pub fn argmax_coarse_graining(&self) -> StochasticMatrix {
        let assignment: Vec<usize> = self
            .data
            .iter()
            .map(|row| {
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        Self::from_assignment(self.rows.clone(), self.cols.clone(), &assignment).expect("valid assignment")
    }
}
