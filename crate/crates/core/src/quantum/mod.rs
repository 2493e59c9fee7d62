//! POVMs, instruments, adaptive sequences and their invariants.

mod asi;
mod instrument;
mod operation;
mod povm;
mod state;
mod validate;

pub use asi::{AdaptiveSequence, ROOT_LABEL};
pub use instrument::Instrument;
pub use operation::{choi_distance, Operation};
pub use povm::{Povm, StochasticMatrix};
pub use state::DensityMatrix;
pub use validate::{Validate, Violation};
