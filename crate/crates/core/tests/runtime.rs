use iqseq::catalog::{self, Qubit4Params};
use iqseq::decompose::{n_step, product_outcomes, two_step, PathWeights};
use iqseq::linalg::{self, r};
use iqseq::quantum::{AdaptiveSequence, DensityMatrix, Instrument, Operation};
use iqseq::random;
use iqseq::runtime::{outcome_probabilities, run, total_instrument, verify_equivalence, RunOptions};
use iqseq::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn opts(shots: usize, seed: u64) -> RunOptions {
    RunOptions {
        shots,
        seed,
        record_intermediate: true,
        keep_trajectories: 5,
    }
}

#[test]
fn single_step_total_is_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random::random_instrument(&mut rng, 3, 2, &[2, 1, 1]);
    let total = total_instrument(&AdaptiveSequence::single(t.clone()), TOL).unwrap();
    assert!(total.max_choi_distance(&t).unwrap() < 1e-12);
}

#[test]
fn three_step_chain_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let t = random::random_instrument(&mut rng, 2, 3, &[1, 2, 1, 1]);
        let nu1 = random::random_stochastic(&mut rng, t.outcomes(), 3, 2);
        let nu2 = random::random_stochastic(&mut rng, nu1.cols(), 2, 2);
        let asi = n_step(&t, &[nu1, nu2], TOL).unwrap();
        assert_eq!(asi.len(), 3);
        assert!(total_instrument(&asi, TOL).unwrap().max_choi_distance(&t).unwrap() < 1e-9);
    }
}

#[test]
fn channel_chain_gives_one_label_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c1 = Instrument::channel("x", Operation::single(random::random_unitary(&mut rng, 2)));
    let c2 = Instrument::channel("y", Operation::single(random::random_unitary(&mut rng, 2)));
    let asi = AdaptiveSequence::new(vec![vec![c1], vec![c2]]).unwrap();
    let rho = DensityMatrix::new(random::random_state(&mut rng, 2, 1), TOL).unwrap();
    let (stats, traj) = run(&asi, &rho, opts(200, 9)).unwrap();
    assert_eq!(stats.counts["y"], 200);
    assert!(traj.iter().all(|t| t.outcomes == ["x", "y"]));
}

#[test]
fn three_outcome_on_p1_always_starts_with_zero() {
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let d = two_step(&t, &catalog::three_outcome_postprocessing(), &PathWeights::FirstPositive, TOL).unwrap();
    let asi = d.to_asi();
    let (stats, _) = run(&asi, &DensityMatrix::basis(3, 1), opts(2000, 4)).unwrap();
    let first = &stats.intermediate.as_ref().unwrap()[0];
    assert_eq!(first["0"], 2000);
    assert_eq!(first["1"], 0);
    // P1 only reaches outcomes 0 and 1, each half the time
    assert_eq!(stats.counts["2"], 0);
    assert!((stats.counts["0"] as f64 / 2000.0 - 0.5).abs() < 0.05);
}

#[test]
fn dead_branches_never_fire() {
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let d = two_step(&t, &catalog::three_outcome_postprocessing(), &PathWeights::FirstPositive, TOL).unwrap();
    let asi = d.to_asi();
    let (_, traj) = run(
        &asi,
        &DensityMatrix::maximally_mixed(3),
        RunOptions {
            shots: 5000,
            seed: 8,
            record_intermediate: false,
            keep_trajectories: 5000,
        },
    )
    .unwrap();
    for tr in &traj {
        let ok = matches!((tr.outcomes[0].as_str(), tr.outcomes[1].as_str()), ("0", "0") | ("0", "1") | ("1", "2"));
        assert!(ok, "impossible path {:?}", tr.outcomes);
        assert!((tr.state.trace() - r(1.0)).norm() < 1e-9);
        assert!(tr.probability > 0.0 && tr.probability <= 1.0);
    }
}

#[test]
fn frequencies_follow_born_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random::random_instrument(&mut rng, 2, 2, &[1, 1, 2]);
    let nu = random::random_stochastic(&mut rng, t.outcomes(), 2, 2);
    let asi = two_step(&t, &nu, &PathWeights::FirstPositive, TOL).unwrap().to_asi();
    let rho = DensityMatrix::new(random::random_state(&mut rng, 2, 2), TOL).unwrap();
    let p = outcome_probabilities(&t, &rho).unwrap();
    let shots = 100_000;
    let (stats, _) = run(&asi, &rho, opts(shots, 77)).unwrap();
    for (k, &pk) in p.iter().enumerate() {
        let f = stats.counts[k] as f64 / shots as f64;
        let sigma = (pk * (1.0 - pk) / shots as f64).sqrt();
        assert!((f - pk).abs() <= 5.0 * sigma, "outcome {k}: {f} vs {pk}");
    }
    let total: f64 = stats.frequencies().values().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_statistics() {
    let asi = product_outcomes(&Instrument::luders(&catalog::qubit4(&Qubit4Params::sic())).unwrap(), TOL).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    let a = run(&asi, &rho, opts(3000, 12)).unwrap();
    let b = run(&asi, &rho, opts(3000, 12)).unwrap();
    assert_eq!(a, b);
    let c = run(&asi, &rho, opts(3000, 13)).unwrap();
    assert_ne!(a.0.counts, c.0.counts);
}

#[test]
fn zero_mass_is_an_error() {
    let broken = Instrument::from_operations(vec!["0".into()], vec![Operation::zero(2, 2)]).unwrap();
    let asi = AdaptiveSequence::single(broken);
    let err = run(&asi, &DensityMatrix::maximally_mixed(2), opts(1, 0)).unwrap_err();
    assert_eq!(err, Error::ZeroProbability { step: 1 });
}

#[test]
fn subnormalized_step_is_flagged() {
    let half = Operation::single(linalg::identity(2) * r(0.8));
    let asi = AdaptiveSequence::single(Instrument::channel("0", half));
    let (stats, traj) = run(&asi, &DensityMatrix::maximally_mixed(2), opts(10, 0)).unwrap();
    assert_eq!(stats.renormalized_shots, 10);
    assert!(traj[0].renormalized);
}

#[test]
fn perturbed_residual_fails_verification() {
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let d = two_step(&t, &catalog::three_outcome_postprocessing(), &PathWeights::FirstPositive, TOL).unwrap();
    assert!(verify_equivalence(&d.to_asi(), &t, TOL).unwrap().passed());
    let mut residuals = d.residuals.clone();
    let ops: Vec<Operation> = residuals[0]
        .operations()
        .iter()
        .enumerate()
        .map(|(k, op)| {
            if k == 0 {
                Operation::single(&op.kraus()[0] * r(1.01))
            } else {
                op.clone()
            }
        })
        .collect();
    residuals[0] = Instrument::from_operations(residuals[0].outcomes().to_vec(), ops).unwrap();
    let asi = AdaptiveSequence::new(vec![vec![d.initial.clone()], residuals]).unwrap();
    let report = verify_equivalence(&asi, &t, TOL).unwrap();
    assert!(!report.passed());
    // Choi of R00.J0 scales by 1.0201
    let expected = 0.0201 * t.operations()[0].choi().norm();
    assert!((report.distances[0] - expected).abs() < 1e-9, "{} vs {expected}", report.distances[0]);
    assert!(report.distances[1] < 1e-12);
}

#[test]
fn identity_is_at_distance_zero() {
    let id = Instrument::identity(3);
    let report = verify_equivalence(&AdaptiveSequence::single(id.clone()), &id, TOL).unwrap();
    assert_eq!(report.max_distance(), 0.0);
}

#[test]
fn mismatches_are_rejected() {
    let id2 = Instrument::identity(2);
    let id3 = Instrument::identity(3);
    assert!(matches!(
        verify_equivalence(&AdaptiveSequence::single(id2.clone()), &id3, TOL),
        Err(Error::DimensionMismatch(_))
    ));
    let relabelled = Instrument::channel("z", Operation::identity(2));
    assert!(matches!(
        verify_equivalence(&AdaptiveSequence::single(id2), &relabelled, TOL),
        Err(Error::OutcomeMismatch(_))
    ));
    assert!(run(&AdaptiveSequence::single(id3), &DensityMatrix::maximally_mixed(2), opts(1, 0)).is_err());
}
