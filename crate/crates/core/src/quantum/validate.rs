use std::fmt;

use crate::linalg::{self, ComplexMatrix};
use crate::quantum::{AdaptiveSequence, Instrument, Povm, StochasticMatrix};

/// One violated invariant with its numeric residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub location: String,
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: residual {:.3e}", self.check, self.location, self.residual)
    }
}

/// Invariant diagnostics. An empty list means the object is valid.
pub trait Validate {
    fn validate(&self, tol: f64) -> Vec<Violation>;
}

fn push(out: &mut Vec<Violation>, check: &'static str, location: impl Into<String>, residual: f64, tol: f64) {
    if !(residual <= tol) {
        out.push(Violation {
            check,
            location: location.into(),
            residual,
        });
    }
}

fn finite(out: &mut Vec<Violation>, m: &ComplexMatrix, location: &str) -> bool {
    if linalg::is_finite(m) {
        return true;
    }
    out.push(Violation {
        check: "finite",
        location: location.into(),
        residual: f64::INFINITY,
    });
    false
}

fn normalization(out: &mut Vec<Violation>, sum: &ComplexMatrix, location: &str, tol: f64) {
    let dev = sum - linalg::identity(sum.nrows());
    push(out, "normalization", location, linalg::hermitian_norm(&dev), tol);
}

impl Validate for Povm {
    fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut sum = linalg::zeros(self.dim(), self.dim());
        for (label, e) in self.outcomes().iter().zip(self.effects()) {
            let loc = format!("effect {label:?}");
            if !finite(&mut out, e, &loc) {
                return out;
            }
            push(&mut out, "hermitian", &loc, linalg::hermitian_residual(e), tol);
            let sym = (e + e.adjoint()) * linalg::r(0.5);
            if let Ok(spec) = linalg::spectral_decomposition(&sym, tol) {
                push(&mut out, "positive", &loc, (-spec.min()).max(0.0), tol);
                push(&mut out, "bounded", &loc, (spec.values[0] - 1.0).max(0.0), tol);
            }
            sum += e;
        }
        normalization(&mut out, &sum, "sum of effects", tol);
        out
    }
}

impl Validate for StochasticMatrix {
    fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, row) in self.data().iter().enumerate() {
            let loc = format!("row {:?}", self.rows()[k]);
            let negative = row.iter().fold(0.0_f64, |acc, v| acc.max(-v));
            push(&mut out, "nonnegative", &loc, negative, tol);
            push(&mut out, "row sum", &loc, (row.iter().sum::<f64>() - 1.0).abs(), tol);
        }
        out
    }
}

impl Validate for Instrument {
    fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (label, op) in self.outcomes().iter().zip(self.operations()) {
            for (m, k) in op.kraus().iter().enumerate() {
                if !finite(&mut out, k, &format!("outcome {label:?} Kraus {m}")) {
                    return out;
                }
            }
        }
        normalization(&mut out, &self.normalization(), "sum of T^dagger T", tol);
        out
    }
}

impl Validate for AdaptiveSequence {
    fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, table) in self.steps().iter().enumerate() {
            let prev = self.previous_outcomes(k);
            for (label, ins) in prev.iter().zip(table) {
                for mut v in ins.validate(tol) {
                    v.location = format!("step {} after {label:?}: {}", k + 1, v.location);
                    out.push(v);
                }
            }
        }
        out
    }
}
