//! JSON file formats. Complex entries are `[re, im]` pairs and matrices are
//! nested row-major arrays; outcome order in a file is authoritative.

use std::path::Path;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error as DomainError;
use crate::linalg::{c, ComplexMatrix};
use crate::quantum::{AdaptiveSequence, DensityMatrix, Instrument, Operation, Povm, StochasticMatrix, ROOT_LABEL};
use crate::resources::ResourceReport;
use crate::runtime::{EquivalenceReport, RunStatistics};

pub const FORMAT_VERSION: u32 = 1;

/// Failure to read a file into a domain object.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub type Matrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> Matrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &Matrix) -> Result<ComplexMatrix, DomainError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(DomainError::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

fn check_shape(m: &ComplexMatrix, rows: usize, cols: usize, what: &str) -> Result<(), DomainError> {
    if m.shape() != (rows, cols) {
        return Err(DomainError::DimensionMismatch(format!(
            "{what} has shape {:?}, expected ({rows}, {cols})",
            m.shape()
        )));
    }
    Ok(())
}

/// Instrument without the version tag, as embedded in sequence files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentBody {
    pub dim_in: usize,
    pub dim_out: usize,
    pub outcomes: Vec<String>,
    /// Per outcome, its Kraus operators.
    pub operations: Vec<Vec<Matrix>>,
}

impl InstrumentBody {
    pub fn from_instrument(t: &Instrument) -> Self {
        Self {
            dim_in: t.dim_in(),
            dim_out: t.dim_out(),
            outcomes: t.outcomes().to_vec(),
            operations: t
                .operations()
                .iter()
                .map(|op| op.kraus().iter().map(matrix_to_json).collect())
                .collect(),
        }
    }

    pub fn to_instrument(&self) -> Result<Instrument, DomainError> {
        if self.outcomes.len() != self.operations.len() {
            return Err(DomainError::Invalid(format!(
                "{} outcome labels for {} operations",
                self.outcomes.len(),
                self.operations.len()
            )));
        }
        let mut kraus = Vec::with_capacity(self.operations.len());
        for (label, ks) in self.outcomes.iter().zip(&self.operations) {
            let mut list = Vec::with_capacity(ks.len());
            for k in ks {
                let m = matrix_from_json(k)?;
                check_shape(&m, self.dim_out, self.dim_in, &format!("Kraus operator of outcome {label:?}"))?;
                list.push(m);
            }
            kraus.push(list);
        }
        Instrument::new(self.dim_in, self.dim_out, self.outcomes.clone(), kraus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentFile {
    pub format_version: u32,
    pub dim_in: usize,
    pub dim_out: usize,
    pub outcomes: Vec<String>,
    pub operations: Vec<Vec<Matrix>>,
}

impl InstrumentFile {
    pub fn new(t: &Instrument) -> Self {
        let body = InstrumentBody::from_instrument(t);
        Self {
            format_version: FORMAT_VERSION,
            dim_in: body.dim_in,
            dim_out: body.dim_out,
            outcomes: body.outcomes,
            operations: body.operations,
        }
    }

    pub fn to_instrument(&self) -> Result<Instrument, DomainError> {
        InstrumentBody {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            outcomes: self.outcomes.clone(),
            operations: self.operations.clone(),
        }
        .to_instrument()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub format_version: u32,
    pub dim: usize,
    pub outcomes: Vec<String>,
    pub effects: Vec<Matrix>,
}

impl PovmFile {
    pub fn new(a: &Povm) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dim: a.dim(),
            outcomes: a.outcomes().to_vec(),
            effects: a.effects().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm, DomainError> {
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let m = matrix_from_json(e)?;
                check_shape(&m, self.dim, self.dim, "effect")?;
                Ok(m)
            })
            .collect::<Result<Vec<_>, DomainError>>()?;
        Povm::new(self.outcomes.clone(), effects)
    }
}

/// Postprocessing matrix with explicit row and column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticFile {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl StochasticFile {
    pub fn new(nu: &StochasticMatrix) -> Self {
        Self {
            rows: nu.rows().to_vec(),
            cols: nu.cols().to_vec(),
            matrix: nu.data().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> Result<StochasticMatrix, DomainError> {
        StochasticMatrix::new(self.rows.clone(), self.cols.clone(), self.matrix.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(default = "version")]
    pub format_version: u32,
    pub matrix: Matrix,
}

fn version() -> u32 {
    FORMAT_VERSION
}

impl StateFile {
    pub fn new(rho: &DensityMatrix) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            matrix: matrix_to_json(rho.matrix()),
        }
    }

    pub fn to_state(&self, tol: f64) -> Result<DensityMatrix, DomainError> {
        let m = matrix_from_json(&self.matrix)?;
        if m.nrows() != m.ncols() {
            return Err(DomainError::DimensionMismatch("state must be square".into()));
        }
        DensityMatrix::new(m, tol)
    }
}

/// Adaptive sequence: step `k` maps each label of the previous outcome set
/// (the single label `"1"` for the first step) to an instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsiFile {
    pub format_version: u32,
    pub dims: Vec<usize>,
    pub outcome_sets: Vec<Vec<String>>,
    pub steps: Vec<IndexMap<String, InstrumentBody>>,
}

impl AsiFile {
    pub fn new(asi: &AdaptiveSequence) -> Self {
        let steps = (0..asi.len())
            .map(|k| {
                asi.previous_outcomes(k)
                    .into_iter()
                    .zip(asi.step(k))
                    .map(|(label, ins)| (label, InstrumentBody::from_instrument(ins)))
                    .collect()
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            dims: asi.dims().to_vec(),
            outcome_sets: asi.outcome_sets().to_vec(),
            steps,
        }
    }

    pub fn to_asi(&self) -> Result<AdaptiveSequence, DomainError> {
        if self.steps.is_empty() || self.outcome_sets.len() != self.steps.len() || self.dims.len() != self.steps.len() + 1 {
            return Err(DomainError::Invalid(format!(
                "{} steps, {} outcome sets and {} dims do not fit together",
                self.steps.len(),
                self.outcome_sets.len(),
                self.dims.len()
            )));
        }
        let mut steps = Vec::with_capacity(self.steps.len());
        for (k, table) in self.steps.iter().enumerate() {
            let previous: Vec<String> = if k == 0 {
                vec![ROOT_LABEL.to_string()]
            } else {
                self.outcome_sets[k - 1].clone()
            };
            let keys: Vec<&String> = table.keys().collect();
            if keys.len() != previous.len() || previous.iter().any(|p| !table.contains_key(p)) {
                return Err(DomainError::OutcomeMismatch(format!(
                    "step {} is keyed by {keys:?}, expected {previous:?}",
                    k + 1
                )));
            }
            let row = previous
                .iter()
                .map(|p| {
                    let ins = table[p].to_instrument()?;
                    if ins.outcomes() != self.outcome_sets[k].as_slice() {
                        return Err(DomainError::OutcomeMismatch(format!(
                            "step {} instrument for {p:?} has outcomes {:?}, expected {:?}",
                            k + 1,
                            ins.outcomes(),
                            self.outcome_sets[k]
                        )));
                    }
                    if (ins.dim_in(), ins.dim_out()) != (self.dims[k], self.dims[k + 1]) {
                        return Err(DomainError::DimensionMismatch(format!(
                            "step {} instrument for {p:?} maps {} -> {}, expected {} -> {}",
                            k + 1,
                            ins.dim_in(),
                            ins.dim_out(),
                            self.dims[k],
                            self.dims[k + 1]
                        )));
                    }
                    Ok(ins)
                })
                .collect::<Result<Vec<_>, DomainError>>()?;
            steps.push(row);
        }
        AdaptiveSequence::new(steps)
    }
}

/// Per-outcome distances written by `decompose` and `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationFile {
    pub passed: bool,
    pub tol: f64,
    pub max_distance: f64,
    pub distances: IndexMap<String, f64>,
    pub povm_distance: f64,
    pub channel_distance: f64,
}

impl VerificationFile {
    pub fn new(report: &EquivalenceReport) -> Self {
        Self {
            passed: report.passed(),
            tol: report.tol,
            max_distance: report.max_distance(),
            distances: report.outcomes.iter().cloned().zip(report.distances.iter().copied()).collect(),
            povm_distance: report.povm_distance,
            channel_distance: report.channel_distance,
        }
    }
}

/// Output of `decompose`: the sequence with its resources and verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub format_version: u32,
    pub mode: String,
    pub asi: AsiFile,
    pub resources: ResourceReport,
    pub verification: VerificationFile,
    /// Original outcome of each final outcome, `null` for padding outcomes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coarse_grain: Option<IndexMap<String, Option<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsFile {
    pub shots: usize,
    pub seed: u64,
    pub counts: IndexMap<String, usize>,
    pub frequencies: IndexMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intermediate: Option<Vec<IndexMap<String, usize>>>,
    pub renormalized_shots: usize,
}

impl StatisticsFile {
    pub fn new(stats: &RunStatistics) -> Self {
        Self {
            shots: stats.shots,
            seed: stats.seed,
            counts: stats.counts.clone(),
            frequencies: stats.frequencies(),
            intermediate: stats.intermediate.clone(),
            renormalized_shots: stats.renormalized_shots,
        }
    }
}

/// Any object `load` can recognise.
#[derive(Debug, Clone)]
pub enum Document {
    Instrument(Instrument),
    Povm(Povm),
    Asi(AdaptiveSequence),
    /// A `decompose` result; carries its coarse-graining map if any.
    Decomposition(AdaptiveSequence, Option<IndexMap<String, Option<String>>>),
    Stochastic(StochasticMatrix),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Instrument(_) => "instrument",
            Document::Povm(_) => "POVM",
            Document::Asi(_) | Document::Decomposition(..) => "adaptive sequence",
            Document::Stochastic(_) => "postprocessing matrix",
        }
    }
}

/// Deserializes with the JSON pointer of the first offending field.
pub fn parse<T: DeserializeOwned>(value: Value) -> Result<T, IoError> {
    serde_path_to_error::deserialize(value).map_err(|e| IoError::Malformed {
        path: pointer(e.path()),
        message: e.inner().to_string(),
    })
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_str(text: &str) -> Result<Value, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Malformed {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Reads a file, `-` meaning standard input.
pub fn read_value(path: &Path) -> Result<Value, IoError> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

/// Recognises the kind of object by its top-level keys.
pub fn document(value: Value) -> Result<Document, IoError> {
    let has = |k: &str| value.get(k).is_some();
    if has("asi") {
        let file: DecompositionFile = parse(value)?;
        Ok(Document::Decomposition(file.asi.to_asi()?, file.coarse_grain))
    } else if has("steps") {
        Ok(Document::Asi(parse::<AsiFile>(value)?.to_asi()?))
    } else if has("effects") {
        Ok(Document::Povm(parse::<PovmFile>(value)?.to_povm()?))
    } else if has("rows") {
        Ok(Document::Stochastic(parse::<StochasticFile>(value)?.to_matrix()?))
    } else if has("operations") {
        Ok(Document::Instrument(parse::<InstrumentFile>(value)?.to_instrument()?))
    } else {
        Err(IoError::Malformed {
            path: "/".into(),
            message: "not an instrument, POVM, sequence or postprocessing file".into(),
        })
    }
}

pub fn load(path: &Path) -> Result<Document, IoError> {
    document(read_value(path)?)
}

/// Instrument from an instrument file, or the Lüders instrument of a POVM file.
pub fn load_instrument(path: &Path) -> Result<Instrument, IoError> {
    match load(path)? {
        Document::Instrument(t) => Ok(t),
        Document::Povm(a) => Ok(Instrument::luders(&a)?),
        other => Err(wrong_kind(path, "an instrument or POVM", other.kind())),
    }
}

pub fn load_asi(path: &Path) -> Result<(AdaptiveSequence, Option<IndexMap<String, Option<String>>>), IoError> {
    match load(path)? {
        Document::Asi(asi) => Ok((asi, None)),
        Document::Decomposition(asi, coarse) => Ok((asi, coarse)),
        other => Err(wrong_kind(path, "an adaptive sequence", other.kind())),
    }
}

pub fn load_stochastic(path: &Path) -> Result<StochasticMatrix, IoError> {
    parse::<StochasticFile>(read_value(path)?)?.to_matrix().map_err(Into::into)
}

pub fn load_state(path: &Path, tol: f64) -> Result<DensityMatrix, IoError> {
    parse::<StateFile>(read_value(path)?)?.to_state(tol).map_err(Into::into)
}

fn wrong_kind(path: &Path, expected: &str, found: &str) -> IoError {
    IoError::Malformed {
        path: "/".into(),
        message: format!("{} holds a {found}, expected {expected}", path.display()),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

/// Operations of an instrument as a `label -> Kraus list` map, for reports.
pub fn operation_map(t: &Instrument) -> IndexMap<String, Vec<Matrix>> {
    t.outcomes()
        .iter()
        .cloned()
        .zip(t.operations().iter().map(|op: &Operation| op.kraus().iter().map(matrix_to_json).collect()))
        .collect()
}
