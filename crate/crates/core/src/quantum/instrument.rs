use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, DEFAULT_TOL};
use crate::quantum::povm::check_unique;
use crate::quantum::{Operation, Povm};

/// Finite-outcome quantum instrument from `dim_in` to `dim_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    dim_in: usize,
    dim_out: usize,
    outcomes: Vec<String>,
    operations: Vec<Operation>,
}

impl Instrument {
    /// Builds an instrument from per-outcome Kraus lists.
    pub fn new(dim_in: usize, dim_out: usize, outcomes: Vec<String>, kraus: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if outcomes.len() != kraus.len() {
            return Err(Error::Invalid(format!(
                "{} outcome labels for {} operations",
                outcomes.len(),
                kraus.len()
            )));
        }
        let operations = kraus
            .into_iter()
            .map(|ks| Operation::new(dim_in, dim_out, ks))
            .collect::<Result<Vec<_>>>()?;
        Self::with_dims(dim_in, dim_out, outcomes, operations)
    }

    pub fn from_operations(outcomes: Vec<String>, operations: Vec<Operation>) -> Result<Self> {
        let first = operations
            .first()
            .ok_or_else(|| Error::Invalid("an instrument needs at least one outcome".into()))?;
        let (dim_in, dim_out) = (first.dim_in(), first.dim_out());
        Self::with_dims(dim_in, dim_out, outcomes, operations)
    }

    fn with_dims(dim_in: usize, dim_out: usize, outcomes: Vec<String>, operations: Vec<Operation>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != operations.len() {
            return Err(Error::Invalid("an instrument needs one operation per outcome".into()));
        }
        check_unique(&outcomes)?;
        if operations.iter().any(|op| (op.dim_in(), op.dim_out()) != (dim_in, dim_out)) {
            return Err(Error::DimensionMismatch(format!(
                "all operations must map {dim_in} -> {dim_out}"
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            outcomes,
            operations,
        })
    }

    /// Single-outcome instrument, i.e. a channel.
    pub fn channel(label: &str, op: Operation) -> Self {
        Self {
            dim_in: op.dim_in(),
            dim_out: op.dim_out(),
            outcomes: vec![label.to_string()],
            operations: vec![op],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::channel("0", Operation::identity(dim))
    }

    /// Lüders instrument: Kraus operator `sqrt(A_i)` for every outcome. Zero
    /// effects give zero operations.
    pub fn luders(povm: &Povm) -> Result<Self> {
        let operations = povm
            .effects()
            .iter()
            .map(|e| {
                let root = linalg::matrix_power(e, 0.5, DEFAULT_TOL)?;
                Ok(if linalg::max_abs(&root) == 0.0 {
                    Operation::zero(povm.dim(), povm.dim())
                } else {
                    Operation::single(root)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_dims(povm.dim(), povm.dim(), povm.outcomes().to_vec(), operations)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }

    pub fn operation(&self, label: &str) -> Option<&Operation> {
        self.index_of(label).map(|i| &self.operations[i])
    }

    /// Induced POVM, effect `k` being `sum_m T_km^dagger T_km`.
    pub fn induced_povm(&self) -> Povm {
        Povm::new(self.outcomes.clone(), self.operations.iter().map(Operation::effect).collect())
            .expect("instrument invariants give a well-formed POVM")
    }

    /// Channel obtained by ignoring the outcome.
    pub fn induced_channel(&self) -> Operation {
        let kraus = self.operations.iter().flat_map(|op| op.kraus().iter().cloned()).collect();
        Operation::new(self.dim_in, self.dim_out, kraus).expect("shapes already checked")
    }

    /// `sum_km T_km^dagger T_km`.
    pub fn normalization(&self) -> ComplexMatrix {
        self.operations
            .iter()
            .fold(linalg::zeros(self.dim_in, self.dim_in), |acc, op| acc + op.effect())
    }

    pub fn kraus_ranks(&self, tol: f64) -> Vec<usize> {
        self.operations.iter().map(|op| op.kraus_rank(tol)).collect()
    }

    /// Sum of the Kraus ranks of all operations.
    pub fn total_rank(&self, tol: f64) -> usize {
        self.kraus_ranks(tol).iter().sum()
    }

    /// Number of outcomes whose operation is not identically zero.
    pub fn nonzero_outcomes(&self, tol: f64) -> usize {
        self.operations.iter().filter(|op| !op.is_zero(tol)).count()
    }

    /// Same instrument with every operation in minimal Kraus form.
    pub fn minimal(&self, tol: f64) -> Result<Instrument> {
        let operations = self
            .operations
            .iter()
            .map(|op| op.minimal(tol))
            .collect::<Result<Vec<_>>>()?;
        Self::with_dims(self.dim_in, self.dim_out, self.outcomes.clone(), operations)
    }

    /// `second` after `self`. Outcome labels are `"a,b"`, ordered with the
    /// first instrument's outcome as the slow index.
    pub fn compose(&self, second: &Instrument) -> Result<Instrument> {
        if self.dim_out != second.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "first instrument outputs {}, second expects {}",
                self.dim_out, second.dim_in
            )));
        }
        let mut outcomes = Vec::with_capacity(self.len() * second.len());
        let mut operations = Vec::with_capacity(self.len() * second.len());
        for (a, t) in self.outcomes.iter().zip(&self.operations) {
            for (b, s) in second.outcomes.iter().zip(&second.operations) {
                outcomes.push(format!("{a},{b}"));
                operations.push(t.then(s)?);
            }
        }
        Self::with_dims(self.dim_in, second.dim_out, outcomes, operations)
    }

    /// Minimal detailed instrument: one outcome per Kraus operator of a
    /// minimal Kraus representation. Detailed labels are `"k#m"`. Returns the
    /// coarse-graining map from detailed outcome index to original outcome index.
    pub fn detailed(&self, tol: f64) -> Result<(Instrument, Vec<usize>)> {
        let mut outcomes = Vec::new();
        let mut operations = Vec::new();
        let mut map = Vec::new();
        for (k, (label, op)) in self.outcomes.iter().zip(&self.operations).enumerate() {
            let minimal = op.minimal(tol)?;
            for (m, kraus) in minimal.into_kraus().into_iter().enumerate() {
                outcomes.push(format!("{label}#{m}"));
                operations.push(Operation::single(kraus));
                map.push(k);
            }
        }
        if operations.is_empty() {
            return Err(Error::Invalid("instrument has no nonzero operation".into()));
        }
        Ok((Self::with_dims(self.dim_in, self.dim_out, outcomes, operations)?, map))
    }

    /// Merges outcomes: outcome `i` of `self` goes to `targets[map[i]]`.
    pub fn coarse_grain(&self, map: &[usize], targets: &[String]) -> Result<Instrument> {
        if map.len() != self.len() || map.iter().any(|&t| t >= targets.len()) {
            return Err(Error::OutcomeMismatch("coarse-graining map does not fit".into()));
        }
        let mut operations = vec![Operation::zero(self.dim_in, self.dim_out); targets.len()];
        for (op, &t) in self.operations.iter().zip(map) {
            operations[t] = operations[t].plus(op)?;
        }
        Self::with_dims(self.dim_in, self.dim_out, targets.to_vec(), operations)
    }

    /// Largest per-outcome Choi distance to another instrument with the same outcomes.
    pub fn max_choi_distance(&self, other: &Instrument) -> Result<f64> {
        if self.outcomes != other.outcomes {
            return Err(Error::OutcomeMismatch(format!(
                "{:?} vs {:?}",
                self.outcomes, other.outcomes
            )));
        }
        let mut worst = 0.0_f64;
        for (a, b) in self.operations.iter().zip(&other.operations) {
            worst = worst.max(crate::quantum::choi_distance(a, b)?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ket_bra, r};
    use crate::quantum::{choi_distance, Validate};
    use crate::random::{random_instrument, random_povm, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(i: usize) -> ComplexMatrix {
        ket_bra(3, 3, i, i)
    }

    fn three_outcome() -> Povm {
        Povm::new(
            vec!["0".into(), "1".into(), "2".into()],
            vec![(p(0) + p(1)) * r(0.5), (p(1) + p(2)) * r(0.5), (p(2) + p(0)) * r(0.5)],
        )
        .unwrap()
    }

    fn shrinking() -> Instrument {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let kb = |i, j| ket_bra(2, 4, i, j);
        Instrument::new(
            4,
            2,
            vec!["1".into(), "2".into(), "3".into()],
            vec![
                vec![kb(0, 0) + kb(1, 1) * r(s2)],
                vec![(kb(0, 1) + kb(1, 2)) * r(s2)],
                vec![kb(0, 2) * r(s2) + kb(1, 3)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn luders_induces_its_povm() {
        let a = three_outcome();
        let t = Instrument::luders(&a).unwrap();
        for (x, y) in t.induced_povm().effects().iter().zip(a.effects()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert_eq!(t.kraus_ranks(DEFAULT_TOL), vec![1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let a = random_povm(&mut rng, 3, &[1, 2, 3]);
            let t = Instrument::luders(&a).unwrap();
            for (x, y) in t.induced_povm().effects().iter().zip(a.effects()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn projective_luders_keeps_projectors() {
        let q = |i| ket_bra(2, 2, i, i);
        let a = Povm::new(vec!["0".into(), "1".into()], vec![q(0), q(1)]).unwrap();
        let t = Instrument::luders(&a).unwrap();
        assert!((&t.operations()[0].kraus()[0] - q(0)).norm() < 1e-14);
        assert!((&t.operations()[1].kraus()[0] - q(1)).norm() < 1e-14);
    }

    #[test]
    fn channel_induces_identity_effect() {
        let t = Instrument::identity(3);
        assert!((&t.induced_povm().effects()[0] - linalg::identity(3)).norm() < 1e-15);
    }

    #[test]
    fn shrinking_example_effect_spectra() {
        let povm = shrinking().induced_povm();
        let expected = [[1.0, 0.5], [0.5, 0.5], [1.0, 0.5]];
        for (e, want) in povm.effects().iter().zip(expected) {
            let s = linalg::spectral_decomposition(e, DEFAULT_TOL).unwrap();
            assert_eq!(s.rank(), 2);
            assert!((s.values[0] - want[0]).abs() < 1e-14 && (s.values[1] - want[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_luders_branch() {
        let t = Instrument::luders(&three_outcome()).unwrap();
        let (out, prob) = t.operations()[0].apply(&p(1)).unwrap();
        assert!((prob - 0.5).abs() < 1e-14);
        assert!((out - p(1) * r(0.5)).norm() < 1e-14);
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let t = random_instrument(&mut rng, 3, 2, &[1, 2, 1]);
            let rho = random_state(&mut rng, 3, 3);
            let total: f64 = t.operations().iter().map(|op| op.apply(&rho).unwrap().1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let (_, p) = t.induced_channel().apply(&rho).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn detailed_instrument_examples() {
        let t = Instrument::luders(&three_outcome()).unwrap();
        let (d, map) = t.detailed(DEFAULT_TOL).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(map, vec![0, 1, 2]);

        // two redundant Kraus operators spanning a rank-2 operation
        let k0 = ket_bra(2, 2, 0, 0);
        let k1 = ket_bra(2, 2, 1, 1);
        let op = Operation::new(2, 2, vec![(&k0 + &k1) * r(0.5), (&k0 - &k1) * r(0.5), k0.clone() * r(0.5_f64.sqrt())]).unwrap();
        let rest = Operation::single(k1 * r((0.5f64).sqrt()));
        let t = Instrument::from_operations(vec!["a".into(), "b".into()], vec![op, rest]).unwrap();
        assert!(t.validate(DEFAULT_TOL).is_empty(), "{:?}", t.validate(DEFAULT_TOL));
        let (d, map) = t.detailed(DEFAULT_TOL).unwrap();
        assert_eq!(map, vec![0, 0, 1]);
        let back = d.coarse_grain(&map, t.outcomes()).unwrap();
        assert!(back.max_choi_distance(&t).unwrap() < 1e-9);
    }

    #[test]
    fn detailed_then_coarse_grain_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let t = random_instrument(&mut rng, 2, 3, &[2, 3, 1]);
            let (d, map) = t.detailed(DEFAULT_TOL).unwrap();
            assert_eq!(d.len(), 6);
            assert!(d.coarse_grain(&map, t.outcomes()).unwrap().max_choi_distance(&t).unwrap() < 1e-9);
        }
    }

    #[test]
    fn compose_examples() {
        let t = Instrument::luders(&three_outcome()).unwrap();
        let c = t.compose(&Instrument::identity(3)).unwrap();
        assert_eq!(c.outcomes()[1], "1,0");
        for (a, b) in c.operations().iter().zip(t.operations()) {
            assert!(choi_distance(a, b).unwrap() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let first = random_instrument(&mut rng, 2, 3, &[1, 2]);
        let second = random_instrument(&mut rng, 3, 2, &[2, 1, 1]);
        let composed = first.compose(&second).unwrap();
        let direct = first.induced_channel().then(&second.induced_channel()).unwrap();
        assert!(choi_distance(&composed.induced_channel(), &direct).unwrap() < 1e-12);
        assert!(second.compose(&second).is_err());
    }

    #[test]
    fn distinct_branches_are_far_apart() {
        let t = Instrument::luders(&three_outcome()).unwrap();
        assert!(choi_distance(&t.operations()[0], &t.operations()[1]).unwrap() > 0.1);
    }
}
