//! Ancilla dimensions, step counts and Kraus-rank bounds of adaptive
//! sequences, plus the outcome-partition optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{AdaptiveSequence, Instrument, StochasticMatrix};
use crate::runtime::total_instrument;

/// `ceil(dim_out / dim_in)`.
pub fn dimension_factor(dim_in: usize, dim_out: usize) -> usize {
    assert!(dim_in > 0 && dim_out > 0, "dimensions must be positive");
    dim_out.div_ceil(dim_in)
}

/// `m_j = sum_{k: nu_kj > 0} r_k`.
pub fn m_values(t: &Instrument, nu: &StochasticMatrix, tol: f64) -> Result<Vec<usize>> {
    if nu.rows() != t.outcomes() {
        return Err(Error::OutcomeMismatch(format!(
            "postprocessing rows {:?} do not match instrument outcomes {:?}",
            nu.rows(),
            t.outcomes()
        )));
    }
    let ranks = t.kraus_ranks(tol);
    Ok((0..nu.cols().len())
        .map(|j| (0..ranks.len()).filter(|&k| nu.is_positive(k, j)).map(|k| ranks[k]).sum())
        .collect())
}

/// Ancilla dimension of the two-step plan for `(T, nu)`:
/// `max(g ceil(|Omega_B| / g), g m_j)`. Only defined when the output is at
/// least as large as the input.
pub fn ancilla_dimension(t: &Instrument, nu: &StochasticMatrix, tol: f64) -> Result<usize> {
    if t.dim_in() > t.dim_out() {
        return Err(Error::Precondition(format!(
            "ancilla formula needs dim_in <= dim_out, got {} > {}",
            t.dim_in(),
            t.dim_out()
        )));
    }
    let g = dimension_factor(t.dim_in(), t.dim_out());
    let m = m_values(t, nu, tol)?;
    let outcomes = g * nu.cols().len().div_ceil(g);
    Ok(m.iter().map(|&mj| g * mj).fold(outcomes, usize::max))
}

/// Smallest `s` with `g^(n-1) s^n >= r`, by integer search.
fn smallest_root(r: usize, g: usize, n: u32) -> usize {
    let target = r as u128;
    let lead = (g as u128).pow(n - 1);
    let mut s: u128 = 1;
    while lead * s.pow(n) < target {
        s += 1;
    }
    s as usize
}

/// Smallest two-step ancilla: `g ceil(sqrt(r_T / g))`.
pub fn minimal_ancilla_two_step(r_t: usize, g: usize) -> usize {
    minimal_ancilla_n_step(r_t, g, 2)
}

/// Smallest `N`-step ancilla: `g ceil((g r_T)^(1/N) / g)`.
pub fn minimal_ancilla_n_step(r_t: usize, g: usize, n: usize) -> usize {
    assert!(r_t >= 1 && g >= 1 && n >= 1, "arguments must be positive");
    g * smallest_root(r_t, g, n as u32)
}

/// Smallest `N` with `r_T <= d_A^(N-1) d_A / g`.
pub fn min_steps(r_t: usize, g: usize, d_a: usize) -> Result<usize> {
    if d_a < g {
        return Err(Error::Precondition(format!(
            "ancilla dimension {d_a} is below the dimension factor {g}"
        )));
    }
    let target = (r_t as u128) * g as u128;
    if d_a == 1 {
        return if target <= 1 {
            Ok(1)
        } else {
            Err(Error::Precondition(format!("a one-dimensional ancilla cannot realize Kraus rank {r_t}")))
        };
    }
    let mut n = 1;
    let mut reach = d_a as u128;
    while reach < target {
        reach *= d_a as u128;
        n += 1;
    }
    Ok(n)
}

/// Lower bound `log2(g r_T)` on `N n_A`.
pub fn tradeoff_bound(r_t: usize, g: usize) -> f64 {
    ((g * r_t) as f64).log2()
}

/// `log_{d_A}(g r_T)`, the real lower bound on the number of steps.
pub fn step_bound(r_t: usize, g: usize, d_a: usize) -> f64 {
    ((g * r_t) as f64).ln() / (d_a as f64).ln()
}

/// Kraus-rank ceiling `prod_k floor(d_0 d_A / d_k)` for dims `d_0..d_N`.
pub fn rank_upper_bound(d_a: usize, dims: &[usize]) -> usize {
    let d0 = dims[0];
    dims[1..].iter().map(|&dk| d0 * d_a / dk).product()
}

/// `ceil(log2 d_A)`.
pub fn ancilla_qubits(d_a: usize) -> usize {
    if d_a <= 1 {
        0
    } else {
        (usize::BITS - (d_a - 1).leading_zeros()) as usize
    }
}

/// Disjoint groups of detailed outcome indices covering `0..r_T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, size: usize) -> Result<Self> {
        let mut seen = vec![false; size];
        for &i in groups.iter().flatten() {
            if i >= size || seen[i] {
                return Err(Error::Invalid(format!("index {i} is out of range or repeated")));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(Error::Invalid(format!("index {i} is not covered")));
        }
        if groups.iter().any(Vec::is_empty) {
            return Err(Error::Invalid("empty group".into()));
        }
        Ok(Self { groups })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// `g max(ceil(|Omega_B| / g), max |omega_j|)`.
    pub fn ancilla_dimension(&self, g: usize) -> usize {
        partition_cost(&self.sizes(), g)
    }
}

fn partition_cost(sizes: &[usize], g: usize) -> usize {
    let largest = sizes.iter().copied().max().unwrap_or(0);
    g * sizes.len().div_ceil(g).max(largest)
}

/// Balanced partition of `r_T` items into `min(d_A, r_T)` groups.
pub fn optimal_partition(r_t: usize, g: usize) -> (Partition, usize) {
    let d_a = minimal_ancilla_two_step(r_t, g);
    let n = d_a.min(r_t);
    let mut groups = vec![Vec::new(); n];
    for i in 0..r_t {
        groups[i % n].push(i);
    }
    let partition = Partition { groups };
    let cost = partition.ancilla_dimension(g);
    (partition, cost)
}

/// Largest size accepted by [`exhaustive_partition_oracle`].
pub const ORACLE_LIMIT: usize = 12;

/// Minimum of the partition cost over every set partition of `r_T` items,
/// enumerated as restricted growth strings.
pub fn exhaustive_partition_oracle(r_t: usize, g: usize) -> Result<usize> {
    if r_t == 0 || r_t > ORACLE_LIMIT {
        return Err(Error::Precondition(format!(
            "exhaustive search supports 1 <= r_T <= {ORACLE_LIMIT}, got {r_t}"
        )));
    }
    let mut labels = vec![0usize; r_t];
    let mut best = usize::MAX;
    fn walk(labels: &mut [usize], pos: usize, blocks: usize, g: usize, best: &mut usize) {
        if pos == labels.len() {
            let mut sizes = vec![0; blocks];
            for &l in labels.iter() {
                sizes[l] += 1;
            }
            *best = (*best).min(partition_cost(&sizes, g));
            return;
        }
        for b in 0..=blocks {
            labels[pos] = b;
            walk(labels, pos + 1, blocks.max(b + 1), g, best);
        }
    }
    labels[0] = 0;
    walk(&mut labels, 1, 1, g, &mut best);
    Ok(best)
}

/// Resource summary of an adaptive sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub g: usize,
    /// Kraus ranks of the total instrument, per final outcome.
    pub ranks: Vec<usize>,
    pub r_t: usize,
    /// `m_j` per first-step outcome, when the postprocessing is known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<Vec<usize>>,
    /// Largest total Kraus rank among the instruments of each step.
    pub step_ranks: Vec<usize>,
    pub d_a: usize,
    pub n_a: usize,
    pub n_steps: usize,
    pub dims: Vec<usize>,
    /// `floor(d_0 d_A / d_k)` for `k = 1..N`.
    pub available: Vec<usize>,
    pub rank_bound: usize,
    /// `log_{d_A}(g r_T)`; absent when `d_A = 1`.
    pub step_bound: Option<f64>,
    /// Smallest step count this `d_A` allows for `r_T`.
    pub min_steps: Option<usize>,
    /// `log2(g r_T)`.
    pub tradeoff_bound: f64,
    pub min_ancilla_two_step: usize,
}

impl ResourceReport {
    /// Computes the report from the sequence itself. The ancilla of step
    /// `k` must dilate its instruments: `ceil(d_k / d_{k-1})` times their
    /// total Kraus rank, rounded up to a multiple of `g`.
    pub fn from_asi(asi: &AdaptiveSequence, tol: f64) -> Result<Self> {
        let total = total_instrument(asi, tol)?;
        let dims = asi.dims().to_vec();
        let g = dimension_factor(dims[0], *dims.last().expect("nonempty dims"));
        let ranks = total.kraus_ranks(tol);
        let r_t: usize = ranks.iter().sum();
        let step_ranks: Vec<usize> = asi
            .steps()
            .iter()
            .map(|table| table.iter().map(|ins| ins.total_rank(tol)).max().unwrap_or(0))
            .collect();
        let d_a = step_ranks
            .iter()
            .enumerate()
            .map(|(k, &rk)| g * (dims[k + 1].div_ceil(dims[k]) * rk).div_ceil(g))
            .max()
            .unwrap_or(g)
            .max(g);
        let available = dims[1..].iter().map(|&dk| dims[0] * d_a / dk).collect();
        let r_eff = r_t.max(1);
        Ok(Self {
            g,
            ranks,
            r_t,
            m: None,
            step_ranks,
            d_a,
            n_a: ancilla_qubits(d_a),
            n_steps: asi.len(),
            rank_bound: rank_upper_bound(d_a, &dims),
            dims,
            available,
            step_bound: (d_a > 1).then(|| step_bound(r_eff, g, d_a)),
            min_steps: min_steps(r_eff, g, d_a).ok(),
            tradeoff_bound: tradeoff_bound(r_eff, g),
            min_ancilla_two_step: minimal_ancilla_two_step(r_eff, g),
        })
    }

    pub fn with_m(mut self, m: Vec<usize>) -> Self {
        self.m = Some(m);
        self
    }

    /// Whether the total Kraus rank respects the sequence's own bound.
    pub fn is_consistent(&self) -> bool {
        self.r_t <= self.rank_bound
    }

    /// `N n_A`, to be compared with [`Self::tradeoff_bound`].
    pub fn qubit_steps(&self) -> usize {
        self.n_steps * self.n_a
    }
}
