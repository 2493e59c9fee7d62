//! Seeded random instances: matrices, states, POVMs, instruments and
//! postprocessing matrices. Used by the test suites and benchmarks.

use rand::Rng;

use crate::linalg::{self, c, r, ComplexMatrix, DEFAULT_TOL};
use crate::quantum::{Instrument, Operation, Povm, StochasticMatrix};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_matrix(rng, n, n).qr().q()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()) * r(0.5)
}

/// PSD matrix of the given rank.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n, rank);
    &a * a.adjoint()
}

/// Density matrix of the given rank.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let p = random_psd(rng, n, rank.max(1));
    let t = p.trace();
    p / t
}

fn normalizer(sum: &ComplexMatrix) -> ComplexMatrix {
    linalg::matrix_power(sum, -0.5, DEFAULT_TOL).expect("sum of PSD matrices is PSD")
}

/// POVM with one effect per entry of `ranks`, effect `k` having rank `ranks[k]`.
/// The ranks must add up to at least `dim`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, ranks: &[usize]) -> Povm {
    assert!(ranks.iter().sum::<usize>() >= dim, "effects cannot sum to identity");
    let raw: Vec<ComplexMatrix> = ranks.iter().map(|&k| random_psd(rng, dim, k)).collect();
    let sum = raw.iter().fold(linalg::zeros(dim, dim), |a, b| a + b);
    let s = normalizer(&sum);
    let effects: Vec<ComplexMatrix> = raw.iter().map(|g| &s * g * &s).collect();
    let outcomes = (0..ranks.len()).map(|k| k.to_string()).collect();
    Povm::new(outcomes, effects).expect("shapes are consistent")
}

/// Instrument with `ranks[k]` Kraus operators for outcome `k`. Requires
/// `dim_out * sum(ranks) >= dim_in` so that normalization is possible.
pub fn random_instrument<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, ranks: &[usize]) -> Instrument {
    let labels = (0..ranks.len()).map(|k| k.to_string()).collect();
    random_instrument_labelled(rng, dim_in, dim_out, ranks, labels)
}

pub fn random_instrument_labelled<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    ranks: &[usize],
    labels: Vec<String>,
) -> Instrument {
    assert!(dim_out * ranks.iter().sum::<usize>() >= dim_in, "instrument cannot be normalized");
    let raw: Vec<Vec<ComplexMatrix>> = ranks
        .iter()
        .map(|&k| (0..k).map(|_| random_matrix(rng, dim_out, dim_in)).collect())
        .collect();
    let sum = raw
        .iter()
        .flatten()
        .fold(linalg::zeros(dim_in, dim_in), |a, k| a + k.adjoint() * k);
    let s = normalizer(&sum);
    let operations = raw
        .into_iter()
        .map(|ks| Operation::new(dim_in, dim_out, ks.into_iter().map(|k| k * &s).collect()).unwrap())
        .collect();
    Instrument::from_operations(labels, operations).expect("shapes are consistent")
}

/// Row-stochastic matrix over the given row labels with `cols` columns.
/// Each row has a random number of nonzero entries, at most `max_support`.
pub fn random_stochastic<R: Rng + ?Sized>(
    rng: &mut R,
    rows: &[String],
    cols: usize,
    max_support: usize,
) -> StochasticMatrix {
    let col_labels: Vec<String> = (0..cols).map(|j| j.to_string()).collect();
    let mut data = vec![vec![0.0; cols]; rows.len()];
    for row in data.iter_mut() {
        let support = rng.random_range(1..=max_support.clamp(1, cols));
        let mut picked: Vec<usize> = (0..cols).collect();
        for i in 0..support {
            let j = rng.random_range(i..cols);
            picked.swap(i, j);
        }
        let weights: Vec<f64> = (0..support).map(|_| 0.1 + rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for (i, w) in weights.iter().enumerate() {
            row[picked[i]] = w / total;
        }
    }
    StochasticMatrix::new(rows.to_vec(), col_labels, data).expect("consistent shape")
}

/// 0/1 postprocessing merging rows into `cols` groups.
pub fn random_coarse_graining<R: Rng + ?Sized>(rng: &mut R, rows: &[String], cols: usize) -> StochasticMatrix {
    let col_labels: Vec<String> = (0..cols).map(|j| j.to_string()).collect();
    let data = rows
        .iter()
        .map(|_| {
            let mut row = vec![0.0; cols];
            row[rng.random_range(0..cols)] = 1.0;
            row
        })
        .collect();
    StochasticMatrix::new(rows.to_vec(), col_labels, data).expect("consistent shape")
}
