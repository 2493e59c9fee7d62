use indexmap::IndexSet;

use crate::decompose::two_step::{two_step, PathWeights};
use crate::error::{Error, Result};
use crate::quantum::{AdaptiveSequence, Instrument, Operation, StochasticMatrix};

/// Separator of tuple-valued outcome labels.
pub const TUPLE_SEPARATOR: char = ',';

/// N-step sequence from a chain of postprocessings
/// `A^T -> B^{N-1} -> ... -> B^1`, given in that order. An empty chain
/// yields the one-step sequence `{T}`.
pub fn n_step(t: &Instrument, chain: &[StochasticMatrix], tol: f64) -> Result<AdaptiveSequence> {
    let mut reversed: Vec<Vec<Instrument>> = Vec::with_capacity(chain.len() + 1);
    let mut current = t.clone();
    for (i, nu) in chain.iter().enumerate() {
        if nu.rows() != current.outcomes() {
            return Err(Error::OutcomeMismatch(format!(
                "chain link {i} has rows {:?}, expected {:?}",
                nu.rows(),
                current.outcomes()
            )));
        }
        let d = two_step(&current, nu, &PathWeights::FirstPositive, tol)?;
        reversed.push(d.residuals);
        current = d.initial;
    }
    reversed.push(vec![current]);
    reversed.reverse();
    AdaptiveSequence::new(reversed)
}

fn split(label: &str) -> Vec<&str> {
    label.split(TUPLE_SEPARATOR).collect()
}

fn join(parts: &[&str]) -> String {
    parts.join(&TUPLE_SEPARATOR.to_string())
}

/// Postprocessing that drops the last tuple element.
pub fn marginal(rows: &[String], cols: &[String]) -> Result<StochasticMatrix> {
    let index: IndexSet<&str> = cols.iter().map(String::as_str).collect();
    let assignment = rows
        .iter()
        .map(|row| {
            let parts = split(row);
            let prefix = join(&parts[..parts.len().saturating_sub(1)]);
            index
                .get_index_of(prefix.as_str())
                .ok_or_else(|| Error::OutcomeMismatch(format!("prefix {prefix:?} of {row:?} is not an outcome")))
        })
        .collect::<Result<Vec<_>>>()?;
    StochasticMatrix::from_assignment(rows.to_vec(), cols.to_vec(), &assignment)
}

/// Prefix sets `Omega_1, ..., Omega_{N-1}` of tuple labels, each in order of
/// first appearance.
pub fn prefix_sets(labels: &[String]) -> Result<Vec<Vec<String>>> {
    let n = split(&labels[0]).len();
    if labels.iter().any(|l| split(l).len() != n) {
        return Err(Error::OutcomeMismatch(format!(
            "outcome labels {labels:?} are not tuples of a common length"
        )));
    }
    Ok((1..n)
        .map(|k| {
            let set: IndexSet<String> = labels.iter().map(|l| join(&split(l)[..k])).collect();
            set.into_iter().collect()
        })
        .collect())
}

/// Sequence whose step `k` fixes the `k`-th element of tuple outcomes
/// `a_1,...,a_N`. Step `k` outcomes are the prefixes `a_1,...,a_k`.
pub fn product_outcomes(t: &Instrument, tol: f64) -> Result<AdaptiveSequence> {
    let prefixes = prefix_sets(t.outcomes())?;
    let mut chain = Vec::with_capacity(prefixes.len());
    let mut rows = t.outcomes().to_vec();
    for cols in prefixes.iter().rev() {
        chain.push(marginal(&rows, cols)?);
        rows = cols.clone();
    }
    n_step(t, &chain, tol)
}

/// Result of the smallest-ancilla construction.
#[derive(Debug, Clone)]
pub struct MinAncilla {
    pub asi: AdaptiveSequence,
    /// Final outcome index to original outcome index, `None` for padding.
    pub coarse: Vec<Option<usize>>,
    /// Dimension increase factor `g`, the ancilla dimension of every step.
    pub g: usize,
}

impl MinAncilla {
    /// Total instrument after merging final outcomes back onto `targets`.
    pub fn coarse_grain(&self, total: &Instrument, targets: &[String]) -> Result<Instrument> {
        let mut ops = vec![Operation::zero(total.dim_in(), total.dim_out()); targets.len()];
        for (op, target) in total.operations().iter().zip(&self.coarse) {
            if let Some(t) = target {
                ops[*t] = ops[*t].plus(op)?;
            }
        }
        Instrument::from_operations(targets.to_vec(), ops)
    }
}

/// Smallest-ancilla sequence: `N` steps with `r_T <= g^{N-1}`; steps before
/// the last carry at most `g` nonzero operations and the last step holds
/// isometries. Requires `g = ceil(dim_out / dim_in) > 1`.
pub fn min_ancilla(t: &Instrument, tol: f64) -> Result<MinAncilla> {
    let g = t.dim_out().div_ceil(t.dim_in());
    if g <= 1 {
        return Err(Error::Precondition(format!(
            "smallest-ancilla construction needs g = ceil(dim_out/dim_in) > 1, got g = {g}"
        )));
    }
    let (detailed, map) = t.detailed(tol)?;
    let rank = detailed.len();
    if rank == 1 {
        let coarse = (0..t.len()).map(Some).collect();
        return Ok(MinAncilla {
            asi: AdaptiveSequence::single(t.clone()),
            coarse,
            g,
        });
    }
    // smallest N with rank <= g^(N-1)
    let mut depth = 1;
    let mut capacity = g;
    while capacity < rank {
        capacity *= g;
        depth += 1;
    }
    let digits: Vec<String> = (0..g).map(|d| d.to_string()).collect();
    let mut tuples: Vec<String> = digits.clone();
    for _ in 1..depth {
        tuples = tuples
            .iter()
            .flat_map(|p| digits.iter().map(move |d| format!("{p}{TUPLE_SEPARATOR}{d}")))
            .collect();
    }
    let mut ops = Vec::with_capacity(tuples.len());
    let mut coarse = Vec::with_capacity(tuples.len());
    for i in 0..tuples.len() {
        if i < rank {
            ops.push(detailed.operations()[i].clone());
            coarse.push(Some(map[i]));
        } else {
            ops.push(Operation::zero(t.dim_in(), t.dim_out()));
            coarse.push(None);
        }
    }
    let padded = Instrument::from_operations(tuples.clone(), ops)?;
    let mut chain = vec![StochasticMatrix::identity(tuples.clone())?];
    let prefixes = prefix_sets(&tuples)?;
    let mut rows = tuples;
    for cols in prefixes.iter().rev() {
        chain.push(marginal(&rows, cols)?);
        rows = cols.clone();
    }
    let asi = n_step(&padded, &chain, tol)?;
    Ok(MinAncilla { asi, coarse, g })
}
