//! Command-line surface. All results go to stdout as JSON and diagnostics
//! to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;

use crate::catalog::{self, Example, Qubit4Params};
use crate::decompose::{
    measurement_instrument, min_ancilla, n_step, povm_two_step, product_outcomes, two_step, two_step_reduced,
    PathWeights,
};
use crate::error::Error as DomainError;
use crate::io::{self, AsiFile, DecompositionFile, Document, InstrumentFile, IoError, PovmFile, StatisticsFile, StochasticFile, VerificationFile};
use crate::linalg::DEFAULT_TOL;
use crate::quantum::{AdaptiveSequence, DensityMatrix, Instrument, Operation, Validate, Violation};
use crate::resources::{m_values, ResourceReport};
use crate::runtime::{self, compare, total_instrument, RunOptions};

/// Exit status for a malformed input file.
pub const EXIT_MALFORMED: i32 = 2;
/// Exit status when an object violates its invariants.
pub const EXIT_INVALID: i32 = 3;
/// Exit status when a sequence does not reproduce its target.
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "iqseq", version, about = "Decompose quantum instruments into adaptive sequences of instruments")]
pub struct Cli {
    /// Numerical tolerance for ranks, validation and verification.
    #[arg(long, global = true, env = "IQSEQ_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    TwoStep,
    TwoStepReduced,
    NStep,
    Product,
    MinAncilla,
    Povm,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::TwoStep => "two-step",
            Mode::TwoStepReduced => "two-step-reduced",
            Mode::NStep => "n-step",
            Mode::Product => "product",
            Mode::MinAncilla => "min-ancilla",
            Mode::Povm => "povm",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instrument, POVM, postprocessing or sequence file.
    Validate { file: PathBuf },
    /// Decompose an instrument (or the Lüders instrument of a POVM).
    Decompose {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Postprocessing matrix for the two-step and POVM modes.
        #[arg(long)]
        postproc: Option<PathBuf>,
        /// Postprocessing chain for n-step mode, first link first.
        #[arg(long, num_args = 1..)]
        chain: Vec<PathBuf>,
    },
    /// Resource report of a sequence.
    Resources { file: PathBuf },
    /// Sample Born-rule trajectories through a sequence.
    Simulate {
        file: PathBuf,
        /// State file, or `maximally-mixed`.
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        record_intermediate: bool,
    },
    /// Compare a sequence's total instrument with a target.
    Verify {
        file: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Print a built-in example.
    Examples {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(catalog::NAMES))]
        name: String,
        #[arg(long, requires_all = ["beta", "eta"])]
        alpha: Option<f64>,
        #[arg(long, requires_all = ["alpha", "eta"])]
        beta: Option<f64>,
        #[arg(long, requires_all = ["alpha", "beta"])]
        eta: Option<f64>,
        /// Print the example's postprocessing matrix instead.
        #[arg(long, conflicts_with = "closed_form")]
        postproc: bool,
        /// Print the closed-form sequence Kraus operators (qubit4 only).
        #[arg(long)]
        closed_form: bool,
    },
}

/// A failed command: exit status and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Malformed { .. } => Failure::new(EXIT_MALFORMED, e.to_string()),
            IoError::Domain(d) => Failure::new(EXIT_INVALID, d.to_string()),
            IoError::Read { .. } => Failure::new(1, e.to_string()),
        }
    }
}

impl From<DomainError> for Failure {
    fn from(e: DomainError) -> Self {
        Failure::new(1, e.to_string())
    }
}

type Outcome = Result<String, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli, err) {
        Ok(text) => {
            let _ = writeln!(out, "{text}");
            0
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Outcome {
    let tol = cli.tol;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::new(1, format!("tolerance must be positive, got {tol}")));
    }
    match &cli.command {
        Command::Validate { file } => validate(file, tol, err),
        Command::Decompose {
            file,
            mode,
            postproc,
            chain,
        } => decompose(file, *mode, postproc.as_deref(), chain, tol, err),
        Command::Resources { file } => {
            let (asi, _) = io::load_asi(file)?;
            Ok(io::to_json(&ResourceReport::from_asi(&asi, tol)?))
        }
        Command::Simulate {
            file,
            state,
            shots,
            seed,
            record_intermediate,
        } => {
            let (asi, _) = io::load_asi(file)?;
            let rho = if state == "maximally-mixed" {
                DensityMatrix::maximally_mixed(asi.dim_in())
            } else {
                io::load_state(Path::new(state), tol)?
            };
            let opts = RunOptions {
                shots: *shots,
                seed: *seed,
                record_intermediate: *record_intermediate,
                keep_trajectories: 0,
            };
            let (stats, _) = runtime::run(&asi, &rho, opts)?;
            if stats.renormalized_shots > 0 {
                let _ = writeln!(
                    err,
                    "warning: {} shots renormalized a step distribution off by more than {:e}",
                    stats.renormalized_shots,
                    runtime::MASS_TOLERANCE
                );
            }
            Ok(io::to_json(&StatisticsFile::new(&stats)))
        }
        Command::Verify { file, target } => {
            let (asi, coarse) = io::load_asi(file)?;
            let target = load_target(target, &asi)?;
            let report = verification(&asi, coarse.as_ref(), &target, tol)?;
            let text = io::to_json(&report);
            if report.passed {
                Ok(text)
            } else {
                let _ = writeln!(err, "{text}");
                Err(Failure::new(
                    EXIT_VERIFY,
                    format!("largest Choi distance {:.3e} exceeds {tol:e}", report.max_distance),
                ))
            }
        }
        Command::Examples {
            name,
            alpha,
            beta,
            eta,
            postproc,
            closed_form,
        } => examples(name, alpha.zip(*beta).zip(*eta).map(|((a, b), e)| (a, b, e)), *postproc, *closed_form),
    }
}

fn report_violations(what: &str, violations: &[Violation], err: &mut dyn Write) -> Result<(), Failure> {
    for v in violations {
        let _ = writeln!(err, "{what}: {v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_INVALID, format!("{what} violates {} invariant(s)", violations.len())))
    }
}

#[derive(Serialize)]
struct ValidationSummary {
    kind: &'static str,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank_bound: Option<usize>,
}

fn validate(file: &Path, tol: f64, err: &mut dyn Write) -> Outcome {
    let doc = io::load(file)?;
    let kind = doc.kind();
    let mut summary = ValidationSummary {
        kind,
        valid: true,
        total_rank: None,
        rank_bound: None,
    };
    let violations = match &doc {
        Document::Instrument(t) => t.validate(tol),
        Document::Povm(a) => a.validate(tol),
        Document::Stochastic(nu) => nu.validate(tol),
        Document::Asi(asi) | Document::Decomposition(asi, _) => {
            let v = asi.validate(tol);
            if v.is_empty() {
                let report = ResourceReport::from_asi(asi, tol)?;
                summary.total_rank = Some(report.r_t);
                summary.rank_bound = Some(report.rank_bound);
                if !report.is_consistent() {
                    let _ = writeln!(
                        err,
                        "{kind}: total Kraus rank {} exceeds its own bound {}",
                        report.r_t, report.rank_bound
                    );
                    return Err(Failure::new(EXIT_INVALID, "sequence is internally inconsistent"));
                }
            }
            v
        }
    };
    report_violations(kind, &violations, err)?;
    Ok(io::to_json(&summary))
}

/// Target for verification: the instrument itself, the Lüders instrument of
/// a POVM, or for sequences ending in a one-dimensional space the POVM's
/// measure-and-discard instrument.
fn load_target(path: &Path, asi: &AdaptiveSequence) -> Result<Instrument, Failure> {
    match io::load(path)? {
        Document::Instrument(t) => Ok(t),
        Document::Povm(a) if asi.dim_out() == 1 && a.dim() != 1 => Ok(measurement_instrument(&a, DEFAULT_TOL)?),
        Document::Povm(a) => Ok(Instrument::luders(&a)?),
        other => Err(Failure::new(
            EXIT_MALFORMED,
            format!("{} holds a {}, expected an instrument or POVM", path.display(), other.kind()),
        )),
    }
}

fn verification(
    asi: &AdaptiveSequence,
    coarse: Option<&IndexMap<String, Option<String>>>,
    target: &Instrument,
    tol: f64,
) -> Result<VerificationFile, Failure> {
    let mut total = total_instrument(asi, tol)?;
    if let Some(map) = coarse {
        let mut ops = vec![Operation::zero(total.dim_in(), total.dim_out()); target.len()];
        for (label, op) in total.outcomes().iter().zip(total.operations()) {
            let Some(Some(original)) = map.get(label) else {
                continue;
            };
            let idx = target
                .index_of(original)
                .ok_or_else(|| Failure::new(1, format!("coarse-graining target {original:?} is not a target outcome")))?;
            ops[idx] = ops[idx].plus(op)?;
        }
        total = Instrument::from_operations(target.outcomes().to_vec(), ops)?;
    }
    Ok(VerificationFile::new(&compare(&total, target, tol)?))
}

fn decompose(file: &Path, mode: Mode, postproc: Option<&Path>, chain: &[PathBuf], tol: f64, err: &mut dyn Write) -> Outcome {
    let doc = io::load(file)?;
    let need_postproc = || {
        postproc
            .ok_or_else(|| Failure::new(1, format!("mode {} needs --postproc", mode.name())))
            .and_then(|p| Ok(io::load_stochastic(p)?))
    };
    let mut m = None;
    let mut coarse = None;
    let (asi, target) = if mode == Mode::Povm {
        let a = match doc {
            Document::Povm(a) => a,
            Document::Instrument(t) => t.induced_povm(),
            other => return Err(Failure::new(EXIT_MALFORMED, format!("cannot decompose a {}", other.kind()))),
        };
        report_violations("POVM", &a.validate(tol), err)?;
        let nu = need_postproc()?;
        let d = povm_two_step(&a, &nu, tol)?;
        (d.to_asi(tol)?, measurement_instrument(&a, tol)?)
    } else {
        let t = match doc {
            Document::Instrument(t) => t,
            Document::Povm(a) => {
                report_violations("POVM", &a.validate(tol), err)?;
                Instrument::luders(&a)?
            }
            other => return Err(Failure::new(EXIT_MALFORMED, format!("cannot decompose a {}", other.kind()))),
        };
        report_violations("instrument", &t.validate(tol), err)?;
        let asi = match mode {
            Mode::TwoStep | Mode::TwoStepReduced => {
                let nu = need_postproc()?;
                m = Some(m_values(&t, &nu, tol)?);
                let d = if mode == Mode::TwoStep {
                    two_step(&t, &nu, &PathWeights::FirstPositive, tol)?
                } else {
                    two_step_reduced(&t, &nu, tol)?
                };
                d.to_asi()
            }
            Mode::NStep => {
                if chain.is_empty() {
                    return Err(Failure::new(1, "mode n-step needs --chain"));
                }
                let links = chain
                    .iter()
                    .map(|p| io::load_stochastic(p))
                    .collect::<Result<Vec<_>, _>>()?;
                n_step(&t, &links, tol)?
            }
            Mode::Product => product_outcomes(&t, tol)?,
            Mode::MinAncilla => {
                let result = min_ancilla(&t, tol)?;
                coarse = Some(
                    result
                        .asi
                        .final_outcomes()
                        .iter()
                        .cloned()
                        .zip(result.coarse.iter().map(|c| c.map(|i| t.outcomes()[i].clone())))
                        .collect::<IndexMap<_, _>>(),
                );
                result.asi
            }
            Mode::Povm => unreachable!("handled above"),
        };
        (asi, t)
    };
    let verification = verification(&asi, coarse.as_ref(), &target, tol)?;
    if !verification.passed {
        let _ = writeln!(err, "{}", io::to_json(&verification));
        return Err(Failure::new(
            EXIT_VERIFY,
            format!(
                "decomposition does not reproduce its input: largest Choi distance {:.3e}",
                verification.max_distance
            ),
        ));
    }
    let mut resources = ResourceReport::from_asi(&asi, tol)?;
    if let Some(m) = m {
        resources = resources.with_m(m);
    }
    let file = DecompositionFile {
        format_version: io::FORMAT_VERSION,
        mode: mode.name().into(),
        asi: AsiFile::new(&asi),
        resources,
        verification,
        coarse_grain: coarse,
    };
    Ok(io::to_json(&file))
}

#[derive(Serialize)]
struct ClosedFormFile {
    step1: IndexMap<String, io::Matrix>,
    step2: IndexMap<String, io::Matrix>,
}

fn examples(name: &str, params: Option<(f64, f64, f64)>, postproc: bool, closed_form: bool) -> Outcome {
    let params = params
        .map(|(a, b, e)| Qubit4Params::new(a, b, e))
        .transpose()?;
    if params.is_some() && name != "qubit4" {
        return Err(Failure::new(1, format!("example {name:?} takes no parameters")));
    }
    if postproc {
        let nu = catalog::postprocessing(name).ok_or_else(|| Failure::new(1, format!("{name:?} has no postprocessing")))?;
        return Ok(io::to_json(&StochasticFile::new(&nu)));
    }
    if closed_form {
        let p = match name {
            "qubit4" => params.unwrap_or_else(Qubit4Params::sic),
            "qubit4-sic" => Qubit4Params::sic(),
            _ => return Err(Failure::new(1, format!("{name:?} has no closed form"))),
        };
        let cf = catalog::qubit4_closed_form(&p);
        let file = ClosedFormFile {
            step1: (0..2).map(|j| (j.to_string(), io::matrix_to_json(&cf.step1[j]))).collect(),
            step2: (0..2)
                .flat_map(|j| (0..2).map(move |k| (j, k)))
                .map(|(j, k)| (format!("{j},{k}"), io::matrix_to_json(&cf.step2[j][k])))
                .collect(),
        };
        return Ok(io::to_json(&file));
    }
    Ok(match catalog::generate(name, params)? {
        Example::Instrument(t) => io::to_json(&InstrumentFile::new(&t)),
        Example::Povm(a) => io::to_json(&PovmFile::new(&a)),
    })
}
