use crate::error::{Error, Result};
use crate::quantum::Instrument;

/// Label of the single outcome preceding the first step.
pub const ROOT_LABEL: &str = "1";

/// N-step adaptive sequence of instruments.
///
/// `steps[k][a]` is the instrument applied at step `k + 1` after outcome
/// `a` (an index into the previous outcome set) of step `k`. The first step
/// is keyed by the singleton `[ROOT_LABEL]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSequence {
    dims: Vec<usize>,
    outcome_sets: Vec<Vec<String>>,
    steps: Vec<Vec<Instrument>>,
}

impl AdaptiveSequence {
    pub fn new(steps: Vec<Vec<Instrument>>) -> Result<Self> {
        let first = steps
            .first()
            .and_then(|s| s.first())
            .ok_or_else(|| Error::Invalid("an adaptive sequence needs at least one step".into()))?;
        if steps[0].len() != 1 {
            return Err(Error::Invalid("the first step must hold exactly one instrument".into()));
        }
        let mut dims = vec![first.dim_in()];
        let mut outcome_sets: Vec<Vec<String>> = Vec::with_capacity(steps.len());
        for (k, table) in steps.iter().enumerate() {
            let expected = if k == 0 { 1 } else { outcome_sets[k - 1].len() };
            if table.len() != expected {
                return Err(Error::OutcomeMismatch(format!(
                    "step {} has {} instruments for {} previous outcomes",
                    k + 1,
                    table.len(),
                    expected
                )));
            }
            let lead = &table[0];
            for ins in table {
                if ins.dim_in() != dims[k] || ins.dim_out() != lead.dim_out() {
                    return Err(Error::DimensionMismatch(format!(
                        "step {} instruments must map {} -> {}",
                        k + 1,
                        dims[k],
                        lead.dim_out()
                    )));
                }
                if ins.outcomes() != lead.outcomes() {
                    return Err(Error::OutcomeMismatch(format!(
                        "step {} instruments have different outcome sets",
                        k + 1
                    )));
                }
            }
            dims.push(lead.dim_out());
            outcome_sets.push(lead.outcomes().to_vec());
        }
        Ok(Self {
            dims,
            outcome_sets,
            steps,
        })
    }

    /// One-step sequence consisting of the instrument itself.
    pub fn single(t: Instrument) -> Self {
        Self::new(vec![vec![t]]).expect("a single instrument is a valid sequence")
    }

    /// Number of steps N.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Dimensions `d_0, ..., d_N`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Outcome sets `Omega_1, ..., Omega_N`.
    pub fn outcome_sets(&self) -> &[Vec<String>] {
        &self.outcome_sets
    }

    /// Outcome labels preceding step `k` (0-based), `[ROOT_LABEL]` for the first.
    pub fn previous_outcomes(&self, k: usize) -> Vec<String> {
        if k == 0 {
            vec![ROOT_LABEL.to_string()]
        } else {
            self.outcome_sets[k - 1].clone()
        }
    }

    pub fn steps(&self) -> &[Vec<Instrument>] {
        &self.steps
    }

    pub fn step(&self, k: usize) -> &[Instrument] {
        &self.steps[k]
    }

    pub fn final_outcomes(&self) -> &[String] {
        self.outcome_sets.last().expect("non-empty")
    }

    pub fn dim_in(&self) -> usize {
        self.dims[0]
    }

    pub fn dim_out(&self) -> usize {
        *self.dims.last().expect("non-empty")
    }

    pub fn instruments(&self) -> impl Iterator<Item = &Instrument> {
        self.steps.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_instrument;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chained_dims_and_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let first = random_instrument(&mut rng, 2, 3, &[1, 1]);
        let second: Vec<_> = (0..2).map(|_| random_instrument(&mut rng, 3, 2, &[1, 2, 1])).collect();
        let asi = AdaptiveSequence::new(vec![vec![first.clone()], second]).unwrap();
        assert_eq!(asi.dims(), &[2, 3, 2]);
        assert_eq!(asi.final_outcomes().len(), 3);
        assert_eq!(asi.previous_outcomes(0), vec!["1".to_string()]);

        let wrong = vec![random_instrument(&mut rng, 2, 2, &[1])];
        assert!(AdaptiveSequence::new(vec![vec![first.clone()], wrong]).is_err());
        let short = vec![random_instrument(&mut rng, 3, 2, &[2])];
        assert!(AdaptiveSequence::new(vec![vec![first], short]).is_err());
    }
}
