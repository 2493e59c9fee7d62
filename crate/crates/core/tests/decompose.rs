use iqseq::catalog::{self, Qubit4Params};
use iqseq::decompose::{
    count_additional_kraus, lift_history_dependence, min_ancilla, n_step, povm_two_step, product_outcomes, two_step,
    two_step_reduced, PathWeights,
};
use iqseq::linalg::{self, r, ComplexMatrix};
use iqseq::quantum::{Instrument, Operation, StochasticMatrix, Validate};
use iqseq::random;
use iqseq::resources::ResourceReport;
use iqseq::runtime::{total_instrument, verify_equivalence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn proj(i: usize) -> ComplexMatrix {
    linalg::ket_bra(3, 3, i, i)
}

fn single_kraus(op: &Operation) -> ComplexMatrix {
    assert_eq!(op.kraus().len(), 1, "expected one Kraus operator");
    op.kraus()[0].clone()
}

#[test]
fn three_outcome_residuals_match_hand_computation() {
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let nu = catalog::three_outcome_postprocessing();
    let d = two_step(&t, &nu, &PathWeights::FirstPositive, TOL).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;

    // sqrt(B0) = P0/sqrt2 + P1 + P2/sqrt2, sqrt(B1) = (P0 + P2)/sqrt2
    let j0 = single_kraus(&d.initial.operations()[0]);
    let j1 = single_kraus(&d.initial.operations()[1]);
    assert!((j0 - (proj(0) * r(s) + proj(1) + proj(2) * r(s))).norm() < 1e-12);
    assert!((j1 - (proj(0) + proj(2)) * r(s)).norm() < 1e-12);

    let r00 = single_kraus(&d.residuals[0].operations()[0]);
    let r01 = single_kraus(&d.residuals[0].operations()[1]);
    let r12 = single_kraus(&d.residuals[1].operations()[2]);
    assert!(linalg::max_abs(&(r00 - (proj(0) + proj(1) * r(s)))) < 1e-12);
    assert!(linalg::max_abs(&(r01 - (proj(1) * r(s) + proj(2)))) < 1e-12);
    assert!(linalg::max_abs(&(r12 - linalg::identity(3))) < 1e-12);

    for (j, k) in [(0, 2), (1, 0), (1, 1)] {
        assert!(d.branch(j, k).unwrap().choi().norm() < 1e-12, "branch ({j}, {k}) is not dead");
    }
    assert!(d.recompose(TOL).unwrap().max_choi_distance(&t).unwrap() < 1e-12);
}

#[test]
fn shrinking_full_path_needs_rank_three() {
    let t = catalog::shrinking();
    let nu = catalog::shrinking_postprocessing();
    let d = two_step(&t, &nu, &PathWeights::FirstPositive, TOL).unwrap();
    assert_eq!(d.additional_kraus, vec![1, 1]);
    assert_eq!(count_additional_kraus(&t, &nu, 0, TOL).unwrap(), 1);
    assert_eq!(count_additional_kraus(&t, &nu, 1, TOL).unwrap(), 1);
    let ranks: Vec<usize> = d.residuals.iter().map(|ins| ins.total_rank(TOL)).collect();
    assert_eq!(ranks, vec![3, 2]);
    assert!(d.residuals.iter().all(|ins| ins.validate(TOL).is_empty()));
    let report = verify_equivalence(&d.to_asi(), &t, TOL).unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(ResourceReport::from_asi(&d.to_asi(), TOL).unwrap().d_a, 3);
}

#[test]
fn shrinking_reduced_path_needs_rank_two() {
    let t = catalog::shrinking();
    let nu = catalog::shrinking_postprocessing();
    let d = two_step_reduced(&t, &nu, TOL).unwrap();
    assert_eq!(d.intermediate_dim(), 3);
    assert_eq!(d.additional_kraus, vec![0, 1]);
    let ranks: Vec<usize> = d.residuals.iter().map(|ins| ins.total_rank(TOL)).collect();
    assert_eq!(ranks, vec![2, 2]);
    let report = verify_equivalence(&d.to_asi(), &t, TOL).unwrap();
    assert!(report.max_distance() < 1e-9, "{report:?}");
    assert_eq!(ResourceReport::from_asi(&d.to_asi(), TOL).unwrap().d_a, 2);
}

#[test]
fn reduced_path_refuses_full_rank_effects() {
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let nu = catalog::three_outcome_postprocessing();
    assert!(two_step_reduced(&t, &nu, TOL).is_err());
}

fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, what: &str) {
    let err = linalg::max_abs(&(a - b));
    assert!(err < 1e-10, "{what}: off by {err:.3e}");
}

fn check_qubit4(p: &Qubit4Params) {
    let a = catalog::qubit4(p);
    let t = Instrument::luders(&a).unwrap();
    let asi = product_outcomes(&t, TOL).unwrap();
    let closed = catalog::qubit4_closed_form(p);
    assert_eq!(asi.outcome_sets()[0], vec!["0", "1"]);
    for j in 0..2 {
        let k1 = single_kraus(&asi.step(0)[0].operations()[j]);
        assert_close(&k1, &closed.step1[j], "step 1");
        for k in 0..2 {
            let ins = &asi.step(1)[j];
            let k2 = single_kraus(&ins.operations()[2 * j + k]);
            assert_close(&k2, &closed.step2[j][k], "step 2");
            // the other prefix never fires after outcome j
            assert!(ins.operations()[2 * (1 - j) + k].is_zero(1e-12));
        }
    }
    let total = total_instrument(&asi, TOL).unwrap();
    assert!(total.max_choi_distance(&t).unwrap() < 1e-10);
}

#[test]
fn qubit4_matches_closed_forms() {
    check_qubit4(&Qubit4Params::sic());
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..10 {
        let beta: f64 = rng.random_range(0.05..1.5);
        let alpha: f64 = rng.random_range(beta..1.52);
        let eta = rng.random_range(0.02..=1.0) * alpha.cos().min(beta.cos());
        check_qubit4(&Qubit4Params::new(alpha, beta, eta).unwrap());
    }
}

#[test]
fn explicit_weights_spread_the_complement() {
    // rank-deficient B_j needs complement weight; spread it over two operators
    let t = Instrument::luders(&catalog::three_outcome()).unwrap();
    let nu = catalog::three_outcome_postprocessing();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = vec![
        vec![vec![r(1.0)], vec![r(0.0)], vec![r(0.0)]],
        vec![vec![r(s)], vec![r(0.0)], vec![r(s)]],
    ];
    let d = two_step(&t, &nu, &PathWeights::Explicit(w), TOL).unwrap();
    assert!(d.residuals.iter().all(|ins| ins.validate(TOL).is_empty()));
    assert!(d.recompose(TOL).unwrap().max_choi_distance(&t).unwrap() < 1e-10);
    let bad = vec![vec![vec![r(1.0)], vec![r(0.0)], vec![r(0.0)]]; 1];
    assert!(two_step(&t, &nu, &PathWeights::Explicit(bad), TOL).is_err());
}

#[test]
fn random_two_step_and_chains_recompose() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let din = rng.random_range(1..=4);
        let dout = rng.random_range(1..=4);
        let ranks: Vec<usize> = loop {
            let n = rng.random_range(1..=4);
            let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2)).collect();
            if dout * ranks.iter().sum::<usize>() >= din {
                break ranks;
            }
        };
        let t = random::random_instrument(&mut rng, din, dout, &ranks);
        let cols = rng.random_range(1..=3);
        let nu = random::random_stochastic(&mut rng, t.outcomes(), cols, 2);
        let d = two_step(&t, &nu, &PathWeights::FirstPositive, TOL).unwrap();
        assert!(d.residuals.iter().all(|ins| ins.validate(1e-8).is_empty()));
        assert!(verify_equivalence(&d.to_asi(), &t, TOL).unwrap().passed());

        let links = rng.random_range(1..=3);
        let mut chain = vec![nu.clone()];
        for _ in 1..links {
            let last: &StochasticMatrix = chain.last().unwrap();
            let last = last.clone();
            let cols = rng.random_range(1..=2);
            let next = random::random_stochastic(&mut rng, last.cols(), cols, 2);
            chain.push(next);
        }
        let asi = n_step(&t, &chain, TOL).unwrap();
        assert_eq!(asi.len(), links + 1);
        assert!(verify_equivalence(&asi, &t, TOL).unwrap().passed());
    }
}

#[test]
fn min_ancilla_uses_g_dimensional_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let t = random::random_instrument(&mut rng, 2, 4, &[2, 1, 2]);
        let m = min_ancilla(&t, TOL).unwrap();
        assert_eq!(m.g, 2);
        // five Kraus operators need 2^3 >= 5, i.e. four steps
        assert_eq!(m.asi.len(), 4);
        for k in 0..m.asi.len() - 1 {
            for ins in m.asi.step(k) {
                assert!(ins.nonzero_outcomes(1e-10) <= 2);
            }
        }
        let total = total_instrument(&m.asi, TOL).unwrap();
        let merged = m.coarse_grain(&total, t.outcomes()).unwrap();
        assert!(merged.max_choi_distance(&t).unwrap() < 1e-9);
        assert_eq!(ResourceReport::from_asi(&m.asi, TOL).unwrap().d_a, 2);
    }
    let square = random::random_instrument(&mut rng, 2, 2, &[1, 1]);
    let err = min_ancilla(&square, TOL).unwrap_err();
    assert!(err.to_string().contains("g = ceil(dim_out/dim_in) > 1"));
}

#[test]
fn povm_two_step_reproduces_effects() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let a = random::random_povm(&mut rng, 3, &[1, 2, 1, 1]);
        let nu = random::random_stochastic(&mut rng, a.outcomes(), 2, 2);
        let d = povm_two_step(&a, &nu, TOL).unwrap();
        assert!(d.conditionals.iter().all(|c| c.validate(1e-8).is_empty()));
        let back = d.recompose().unwrap();
        for (x, y) in back.effects().iter().zip(a.effects()) {
            assert!((x - y).norm() < 1e-9);
        }
    }
}

#[test]
fn history_dependence_is_lifted() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let first = random::random_instrument_labelled(&mut rng, 2, 2, &[1, 1], names(&["a", "b"]));
    let second_a = random::random_instrument_labelled(&mut rng, 2, 2, &[1, 1], names(&["x", "y"]));
    let second_b = random::random_instrument_labelled(&mut rng, 2, 2, &[2, 1], names(&["x", "y"]));
    let third: Vec<(Vec<String>, Instrument)> = ["a", "b"]
        .iter()
        .flat_map(|&p| ["x", "y"].map(move |q| (p, q)))
        .map(|(p, q)| {
            let ins = random::random_instrument_labelled(&mut rng.clone(), 2, 2, &[1, 1], names(&["u", "v"]));
            (vec![p.to_string(), q.to_string()], ins)
        })
        .collect();
    let raw = vec![
        vec![(vec![], first.clone())],
        vec![(vec!["a".to_string()], second_a.clone()), (vec!["b".to_string()], second_b.clone())],
        third.clone(),
    ];
    let asi = lift_history_dependence(&raw).unwrap();
    assert_eq!(asi.final_outcomes().len(), 8);
    let total = total_instrument(&asi, TOL).unwrap();
    // direct sum over histories
    for (idx, label) in total.outcomes().iter().enumerate() {
        let parts: Vec<&str> = label.split(',').collect();
        let a = first.index_of(parts[0]).unwrap();
        let second = if parts[0] == "a" { &second_a } else { &second_b };
        let b = second.index_of(parts[1]).unwrap();
        let ins3 = &third.iter().find(|(h, _)| h[0] == parts[0] && h[1] == parts[1]).unwrap().1;
        let c = ins3.index_of(parts[2]).unwrap();
        let path = first.operations()[a]
            .then(&second.operations()[b])
            .unwrap()
            .then(&ins3.operations()[c])
            .unwrap();
        assert!(iqseq::quantum::choi_distance(&path, &total.operations()[idx]).unwrap() < 1e-10);
    }
}

#[test]
fn shrinking_effect_ranks() {
    // sum of K^dagger K per outcome, computed here rather than by the library
    let t = catalog::shrinking();
    let ranks: Vec<usize> = t
        .operations()
        .iter()
        .map(|op| {
            let e = op.kraus().iter().fold(linalg::zeros(4, 4), |a, k| a + k.adjoint() * k);
            linalg::rank(&e, TOL)
        })
        .collect();
    assert_eq!(ranks, vec![2, 2, 2]);
}
