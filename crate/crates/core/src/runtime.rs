//! Execution of adaptive sequences: total instrument, seeded Born-rule
//! trajectories and equivalence checks.

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{r, ComplexMatrix};
use crate::quantum::{choi_distance, AdaptiveSequence, DensityMatrix, Instrument, Operation};

/// Residual probability mass beyond which a step's distribution is
/// renormalized and flagged.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Total instrument: every final outcome's operation summed over all
/// intermediate paths, compressed to minimal Kraus form after each step.
pub fn total_instrument(asi: &AdaptiveSequence, tol: f64) -> Result<Instrument> {
    let first = &asi.step(0)[0];
    let mut acc: Vec<Operation> = first.operations().iter().map(|op| op.minimal(tol)).collect::<Result<_>>()?;
    for k in 1..asi.len() {
        let table = asi.step(k);
        let dim_out = asi.dims()[k + 1];
        let mut next = vec![Operation::zero(asi.dim_in(), dim_out); asi.outcome_sets()[k].len()];
        for (prev, ins) in acc.iter().zip(table) {
            if prev.kraus().is_empty() {
                continue;
            }
            for (b, op) in ins.operations().iter().enumerate() {
                if op.kraus().is_empty() {
                    continue;
                }
                next[b] = next[b].plus(&prev.then(op)?)?;
            }
        }
        acc = next.iter().map(|op| op.minimal(tol)).collect::<Result<_>>()?;
    }
    Instrument::from_operations(asi.final_outcomes().to_vec(), acc)
}

/// One sampled run through the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub outcomes: Vec<String>,
    pub state: ComplexMatrix,
    pub probability: f64,
    /// Set when some step's outcome probabilities had to be renormalized.
    pub renormalized: bool,
}

/// Outcome frequencies of a batch of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub shots: usize,
    pub seed: u64,
    /// Counts of final outcomes, in final outcome order.
    pub counts: IndexMap<String, usize>,
    /// Counts per intermediate step (steps `1..N-1`), when requested.
    pub intermediate: Option<Vec<IndexMap<String, usize>>>,
    /// Number of shots in which some step was renormalized.
    pub renormalized_shots: usize,
}

impl RunStatistics {
    pub fn frequencies(&self) -> IndexMap<String, f64> {
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / self.shots.max(1) as f64))
            .collect()
    }
}

/// Options for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub shots: usize,
    pub seed: u64,
    pub record_intermediate: bool,
    /// Number of leading trajectories returned in full.
    pub keep_trajectories: usize,
}

struct Shot {
    path: Vec<usize>,
    state: ComplexMatrix,
    probability: f64,
    renormalized: bool,
}

fn shot(asi: &AdaptiveSequence, rho0: &ComplexMatrix, seed: u64, index: u64) -> Result<Shot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut rho = rho0.clone();
    let mut prev = 0;
    let mut path = Vec::with_capacity(asi.len());
    let mut probability = 1.0;
    let mut renormalized = false;
    for k in 0..asi.len() {
        let ins = &asi.step(k)[prev];
        let branches = ins
            .operations()
            .iter()
            .map(|op| op.apply(&rho))
            .collect::<Result<Vec<_>>>()?;
        let weights: Vec<f64> = branches.iter().map(|(_, p)| p.max(0.0)).collect();
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::ZeroProbability { step: k + 1 });
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            renormalized = true;
        }
        let u = rng.random::<f64>() * mass;
        let mut cumulative = 0.0;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).expect("positive mass");
        for (b, &w) in weights.iter().enumerate() {
            cumulative += w;
            if u < cumulative && w > 0.0 {
                pick = b;
                break;
            }
        }
        let (out, p) = &branches[pick];
        probability *= weights[pick] / mass;
        rho = out / r(*p);
        path.push(pick);
        prev = pick;
    }
    Ok(Shot {
        path,
        state: rho,
        probability,
        renormalized,
    })
}

/// Samples `shots` trajectories. Shot `i` draws from ChaCha8 seeded with
/// `seed` on stream `i`, so results do not depend on scheduling.
pub fn run(asi: &AdaptiveSequence, rho0: &DensityMatrix, opts: RunOptions) -> Result<(RunStatistics, Vec<Trajectory>)> {
    if rho0.dim() != asi.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, sequence expects {}",
            rho0.dim(),
            asi.dim_in()
        )));
    }
    let shots: Vec<Shot> = (0..opts.shots as u64)
        .into_par_iter()
        .map(|i| shot(asi, rho0.matrix(), opts.seed, i))
        .collect::<Result<_>>()?;
    let mut counts: IndexMap<String, usize> = asi.final_outcomes().iter().map(|o| (o.clone(), 0)).collect();
    let mut intermediate: Vec<IndexMap<String, usize>> = asi.outcome_sets()[..asi.len() - 1]
        .iter()
        .map(|set| set.iter().map(|o| (o.clone(), 0)).collect())
        .collect();
    let mut renormalized_shots = 0;
    for s in &shots {
        let last = *s.path.last().expect("at least one step");
        counts[last] += 1;
        if opts.record_intermediate {
            for (k, &a) in s.path[..s.path.len() - 1].iter().enumerate() {
                intermediate[k][a] += 1;
            }
        }
        renormalized_shots += usize::from(s.renormalized);
    }
    let trajectories = shots
        .into_iter()
        .take(opts.keep_trajectories)
        .map(|s| Trajectory {
            outcomes: s.path.iter().enumerate().map(|(k, &a)| asi.outcome_sets()[k][a].clone()).collect(),
            state: s.state,
            probability: s.probability,
            renormalized: s.renormalized,
        })
        .collect();
    let stats = RunStatistics {
        shots: opts.shots,
        seed: opts.seed,
        counts,
        intermediate: opts.record_intermediate.then_some(intermediate),
        renormalized_shots,
    };
    Ok((stats, trajectories))
}

/// Distances between a sequence's total instrument and a target.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub outcomes: Vec<String>,
    /// Choi distance per final outcome.
    pub distances: Vec<f64>,
    /// Largest Frobenius distance between induced POVM effects.
    pub povm_distance: f64,
    /// Choi distance between the induced channels.
    pub channel_distance: f64,
    pub tol: f64,
}

impl EquivalenceReport {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().fold(0.0, |a: f64, &d| a.max(d))
    }

    pub fn passed(&self) -> bool {
        self.max_distance() < self.tol && self.povm_distance < self.tol && self.channel_distance < self.tol
    }
}

pub fn verify_equivalence(asi: &AdaptiveSequence, target: &Instrument, tol: f64) -> Result<EquivalenceReport> {
    compare(&total_instrument(asi, tol)?, target, tol)
}

/// Per-outcome comparison of two instruments with identical outcome sets.
pub fn compare(total: &Instrument, target: &Instrument, tol: f64) -> Result<EquivalenceReport> {
    if (total.dim_in(), total.dim_out()) != (target.dim_in(), target.dim_out()) {
        return Err(Error::DimensionMismatch(format!(
            "sequence maps {} -> {}, target maps {} -> {}",
            total.dim_in(),
            total.dim_out(),
            target.dim_in(),
            target.dim_out()
        )));
    }
    if total.outcomes() != target.outcomes() {
        return Err(Error::OutcomeMismatch(format!(
            "sequence outcomes {:?} differ from target outcomes {:?}",
            total.outcomes(),
            target.outcomes()
        )));
    }
    let distances = total
        .operations()
        .iter()
        .zip(target.operations())
        .map(|(a, b)| choi_distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    let povm_distance = total
        .induced_povm()
        .effects()
        .iter()
        .zip(target.induced_povm().effects())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
    let channel_distance = choi_distance(&total.induced_channel(), &target.induced_channel())?;
    Ok(EquivalenceReport {
        outcomes: total.outcomes().to_vec(),
        distances,
        povm_distance,
        channel_distance,
        tol,
    })
}

/// Born-rule probabilities of an instrument's outcomes.
pub fn outcome_probabilities(t: &Instrument, rho: &DensityMatrix) -> Result<Vec<f64>> {
    t.induced_povm().probabilities(rho.matrix())
}
