//! Constructive decompositions of instruments into adaptive sequences.

mod chain;
mod fill;
mod history;
mod povm;
mod two_step;

pub use chain::{marginal, min_ancilla, n_step, prefix_sets, product_outcomes, MinAncilla, TUPLE_SEPARATOR};
pub use history::{lift_history_dependence, HistoryTable};
pub use povm::{measurement_instrument, povm_two_step, PovmTwoStep};
pub use two_step::{count_additional_kraus, two_step, two_step_reduced, PathWeights, TwoStepDecomposition};
