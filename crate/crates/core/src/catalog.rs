//! Built-in worked examples: a three-outcome qutrit POVM, a four-to-two
//! dimensional instrument that needs auxiliary Kraus operators, and a
//! three-parameter family of four-outcome qubit POVMs containing the SIC.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{self, r, ComplexMatrix};
use crate::quantum::{Instrument, Povm, StochasticMatrix};

/// Names accepted by [`generate`].
pub const NAMES: [&str; 4] = ["three-outcome", "shrinking", "qubit4", "qubit4-sic"];

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn projector(dim: usize, i: usize) -> ComplexMatrix {
    linalg::ket_bra(dim, dim, i, i)
}

/// Effects `(P0+P1)/2, (P1+P2)/2, (P2+P0)/2` on a qutrit.
pub fn three_outcome() -> Povm {
    let p: Vec<ComplexMatrix> = (0..3).map(|i| projector(3, i)).collect();
    let half = r(0.5);
    let effects = vec![(&p[0] + &p[1]) * half, (&p[1] + &p[2]) * half, (&p[2] + &p[0]) * half];
    Povm::new(labels(&["0", "1", "2"]), effects).expect("static example")
}

/// Merges outcomes 0 and 1 of [`three_outcome`].
pub fn three_outcome_postprocessing() -> StochasticMatrix {
    StochasticMatrix::from_assignment(labels(&["0", "1", "2"]), labels(&["0", "1"]), &[0, 0, 1]).expect("static example")
}

/// Two-qubit to one-qubit instrument with one Kraus operator per outcome,
/// each with a two-dimensional image.
pub fn shrinking() -> Instrument {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let kb = |i, j| linalg::ket_bra(2, 4, i, j);
    let k1 = kb(0, 0) + kb(1, 1) * r(s);
    let k2 = kb(0, 1) * r(s) + kb(1, 2) * r(s);
    let k3 = kb(0, 2) * r(s) + kb(1, 3);
    Instrument::new(4, 2, labels(&["1", "2", "3"]), vec![vec![k1], vec![k2], vec![k3]]).expect("static example")
}

/// Merges outcomes 1 and 2 of [`shrinking`].
pub fn shrinking_postprocessing() -> StochasticMatrix {
    StochasticMatrix::from_assignment(labels(&["1", "2", "3"]), labels(&["0", "1"]), &[0, 0, 1]).expect("static example")
}

/// Parameters of the qubit family: angles `alpha >= beta` in `(0, pi/2)`
/// and sharpness `0 < eta <= min(cos alpha, cos beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit4Params {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl Qubit4Params {
    pub fn new(alpha: f64, beta: f64, eta: f64) -> Result<Self> {
        let open = |x: f64| x > 0.0 && x < FRAC_PI_2;
        if !open(alpha) || !open(beta) {
            return Err(Error::Precondition(format!(
                "angles must lie in (0, pi/2), got alpha = {alpha}, beta = {beta}"
            )));
        }
        if alpha < beta {
            return Err(Error::Precondition(format!("expected alpha >= beta, got {alpha} < {beta}")));
        }
        let cap = alpha.cos().min(beta.cos());
        if !(eta > 0.0 && eta <= cap * (1.0 + 1e-12)) {
            return Err(Error::Precondition(format!("eta must lie in (0, {cap}], got {eta}")));
        }
        Ok(Self { alpha, beta, eta })
    }

    /// Tetrahedral (SIC) point `alpha = beta = arccos(1/sqrt 3)`, `eta = 1/sqrt 3`.
    pub fn sic() -> Self {
        let t = (1.0 / 3f64.sqrt()).acos();
        Self {
            alpha: t,
            beta: t,
            eta: 1.0 / 3f64.sqrt(),
        }
    }

    /// `theta_0 = beta`, `theta_1 = alpha`.
    pub fn theta(&self, j: usize) -> f64 {
        if j == 0 {
            self.beta
        } else {
            self.alpha
        }
    }

    /// Unit Bloch direction of effect `(j, k)`.
    pub fn n_a(&self, j: usize, k: usize) -> [f64; 3] {
        let sign = if k == 0 { -1.0 } else { 1.0 };
        match j {
            0 => [sign * self.beta.sin(), 0.0, -self.beta.cos()],
            _ => [0.0, sign * self.alpha.sin(), self.alpha.cos()],
        }
    }

    /// Unit direction of the marginal effect `B_j`.
    pub fn n_b(&self, j: usize) -> [f64; 3] {
        let (a, b) = (self.n_a(j, 0), self.n_a(j, 1));
        let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        [s[0] / norm, s[1] / norm, s[2] / norm]
    }
}

/// Outcome labels `"j,k"` of the qubit family.
pub fn qubit4_labels() -> Vec<String> {
    labels(&["0,0", "0,1", "1,0", "1,1"])
}

/// `A_jk = (I + eta sec(theta_j) n_jk . sigma) / 4`.
pub fn qubit4(p: &Qubit4Params) -> Povm {
    let mut effects = Vec::with_capacity(4);
    for j in 0..2 {
        for k in 0..2 {
            let n = p.n_a(j, k);
            let s = p.eta / p.theta(j).cos();
            effects.push(linalg::pauli_combination(0.25, [0.25 * s * n[0], 0.25 * s * n[1], 0.25 * s * n[2]]));
        }
    }
    Povm::new(qubit4_labels(), effects).expect("static example")
}

fn along(a: f64, b: f64, n: [f64; 3]) -> ComplexMatrix {
    linalg::pauli_combination(a, [b * n[0], b * n[1], b * n[2]])
}

/// Closed-form Kraus operators of the two-step sequence for the qubit family.
#[derive(Debug, Clone)]
pub struct Qubit4ClosedForm {
    /// `F+ I + F- (n_Bj . sigma)` for `j = 0, 1`.
    pub step1: [ComplexMatrix; 2],
    /// `[G_{j,+} I + G_{j,-} (n_Ajk . sigma)][H+ I + H- (n_Bj . sigma)]`, indexed `[j][k]`.
    pub step2: [[ComplexMatrix; 2]; 2],
}

pub fn qubit4_closed_form(p: &Qubit4Params) -> Qubit4ClosedForm {
    let eta = p.eta;
    let (fp, fm) = (((1.0 + eta) / 2.0).sqrt(), ((1.0 - eta) / 2.0).sqrt());
    let (hp, hm) = (1.0 / fp, 1.0 / fm);
    let big = |x: f64, y: f64| ((x + y) / 2.0, (x - y) / 2.0);
    let (f_plus, f_minus) = big(fp, fm);
    let (h_plus, h_minus) = big(hp, hm);
    let step1 = [0, 1].map(|j| along(f_plus, f_minus, p.n_b(j)));
    let step2 = [0, 1].map(|j| {
        let sec = 1.0 / p.theta(j).cos();
        let gp = 0.5 * (1.0 + eta * sec).sqrt();
        let gm = 0.5 * (1.0 - eta * sec).max(0.0).sqrt();
        let (g_plus, g_minus) = big(gp, gm);
        let h = along(h_plus, h_minus, p.n_b(j));
        [0, 1].map(|k| along(g_plus, g_minus, p.n_a(j, k)) * &h)
    });
    Qubit4ClosedForm { step1, step2 }
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub enum Example {
    Instrument(Instrument),
    Povm(Povm),
}

impl Example {
    /// The instrument itself, or the Lüders instrument of a POVM.
    pub fn instrument(&self) -> Result<Instrument> {
        match self {
            Example::Instrument(t) => Ok(t.clone()),
            Example::Povm(a) => Instrument::luders(a),
        }
    }
}

/// Builds a named example. `params` only applies to `qubit4`, which falls
/// back to the SIC point when none are given.
pub fn generate(name: &str, params: Option<Qubit4Params>) -> Result<Example> {
    match name {
        "three-outcome" => Ok(Example::Povm(three_outcome())),
        "shrinking" => Ok(Example::Instrument(shrinking())),
        "qubit4" => Ok(Example::Povm(qubit4(&params.unwrap_or_else(Qubit4Params::sic)))),
        "qubit4-sic" => Ok(Example::Povm(qubit4(&Qubit4Params::sic()))),
        other => Err(Error::Precondition(format!(
            "unknown example {other:?}; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

/// Postprocessing used with a named example, where there is one.
pub fn postprocessing(name: &str) -> Option<StochasticMatrix> {
    match name {
        "three-outcome" => Some(three_outcome_postprocessing()),
        "shrinking" => Some(shrinking_postprocessing()),
        "qubit4" | "qubit4-sic" => Some(
            StochasticMatrix::from_assignment(qubit4_labels(), labels(&["0", "1"]), &[0, 0, 1, 1]).expect("static example"),
        ),
        _ => None,
    }
}
