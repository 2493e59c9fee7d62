//! Python bindings. Matrices cross the boundary as nested lists of `complex`
//! (row-major), structured results as plain dicts.

use iqseq::catalog::{self, Qubit4Params};
use iqseq::decompose::{self, PathWeights};
use iqseq::io::{self, AsiFile, InstrumentFile, PovmFile, StatisticsFile, StochasticFile, VerificationFile};
use iqseq::linalg::{ComplexMatrix, DEFAULT_TOL};
use iqseq::quantum::{AdaptiveSequence, DensityMatrix, Operation, StochasticMatrix, Validate};
use iqseq::resources::ResourceReport;
use iqseq::runtime::{self, RunOptions};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

type Rows = Vec<Vec<Complex64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_json<T: DeserializeOwned>(text: &str) -> PyResult<T> {
    io::parse(io::parse_str(text).map_err(err)?).map_err(err)
}

#[pyclass(name = "Instrument", module = "iqseq", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstrument {
    inner: iqseq::quantum::Instrument,
}

#[pymethods]
impl PyInstrument {
    /// `kraus[k]` is the list of Kraus matrices of outcome `outcomes[k]`.
    #[new]
    fn new(dim_in: usize, dim_out: usize, outcomes: Vec<String>, kraus: Vec<Vec<Rows>>) -> PyResult<Self> {
        let kraus = kraus
            .iter()
            .map(|ks| ks.iter().map(to_matrix).collect::<PyResult<Vec<_>>>())
            .collect::<PyResult<Vec<_>>>()?;
        let inner = iqseq::quantum::Instrument::new(dim_in, dim_out, outcomes, kraus).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn luders(povm: &PyPovm) -> PyResult<Self> {
        Ok(Self {
            inner: iqseq::quantum::Instrument::luders(&povm.inner).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: InstrumentFile = from_json(text)?;
        Ok(Self {
            inner: file.to_instrument().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::to_json(&InstrumentFile::new(&self.inner))
    }

    #[getter]
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }

    #[getter]
    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }

    #[getter]
    fn outcomes(&self) -> Vec<String> {
        self.inner.outcomes().to_vec()
    }

    fn kraus(&self) -> Vec<Vec<Rows>> {
        self.inner
            .operations()
            .iter()
            .map(|op| op.kraus().iter().map(to_rows).collect())
            .collect()
    }

    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn kraus_ranks(&self, tol: f64) -> Vec<usize> {
        self.inner.kraus_ranks(tol)
    }

    /// Human-readable invariant violations; empty when valid.
    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn validate(&self, tol: f64) -> Vec<String> {
        self.inner.validate(tol).iter().map(|v| v.to_string()).collect()
    }

    fn probabilities(&self, state: Rows) -> PyResult<Vec<f64>> {
        let rho = DensityMatrix::new(to_matrix(&state)?, DEFAULT_TOL).map_err(err)?;
        runtime::outcome_probabilities(&self.inner, &rho).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instrument(dim_in={}, dim_out={}, outcomes={:?})",
            self.inner.dim_in(),
            self.inner.dim_out(),
            self.inner.outcomes()
        )
    }
}

#[pyclass(name = "Povm", module = "iqseq", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPovm {
    inner: iqseq::quantum::Povm,
}

#[pymethods]
impl PyPovm {
    #[new]
    fn new(outcomes: Vec<String>, effects: Vec<Rows>) -> PyResult<Self> {
        let effects = effects.iter().map(to_matrix).collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: iqseq::quantum::Povm::new(outcomes, effects).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: PovmFile = from_json(text)?;
        Ok(Self {
            inner: file.to_povm().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::to_json(&PovmFile::new(&self.inner))
    }

    #[getter]
    fn outcomes(&self) -> Vec<String> {
        self.inner.outcomes().to_vec()
    }

    fn effects(&self) -> Vec<Rows> {
        self.inner.effects().iter().map(to_rows).collect()
    }

    fn probabilities(&self, state: Rows) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&to_matrix(&state)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Povm(dim={}, outcomes={:?})", self.inner.dim(), self.inner.outcomes())
    }
}

#[pyclass(name = "Postprocessing", module = "iqseq", frozen, from_py_object)]
#[derive(Clone)]
struct PyPostprocessing {
    inner: StochasticMatrix,
}

#[pymethods]
impl PyPostprocessing {
    /// Row-stochastic matrix: `data[k][j]` is the probability of column `j` given row `k`.
    #[new]
    fn new(rows: Vec<String>, cols: Vec<String>, data: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: StochasticMatrix::new(rows, cols, data).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: StochasticFile = from_json(text)?;
        Ok(Self {
            inner: file.to_matrix().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::to_json(&StochasticFile::new(&self.inner))
    }

    #[getter]
    fn rows(&self) -> Vec<String> {
        self.inner.rows().to_vec()
    }

    #[getter]
    fn cols(&self) -> Vec<String> {
        self.inner.cols().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<Vec<f64>> {
        self.inner.data().to_vec()
    }
}

#[pyclass(name = "Sequence", module = "iqseq", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySequence {
    inner: AdaptiveSequence,
}

#[pymethods]
impl PySequence {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: AsiFile = from_json(text)?;
        Ok(Self {
            inner: file.to_asi().map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::to_json(&AsiFile::new(&self.inner))
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn outcome_sets(&self) -> Vec<Vec<String>> {
        self.inner.outcome_sets().to_vec()
    }

    /// Instruments of step `k`, one per outcome of step `k - 1`.
    fn step(&self, k: usize) -> PyResult<Vec<PyInstrument>> {
        if k >= self.inner.len() {
            return Err(PyValueError::new_err(format!("step {k} out of range")));
        }
        Ok(self.inner.step(k).iter().map(|t| PyInstrument { inner: t.clone() }).collect())
    }

    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn total(&self, tol: f64) -> PyResult<PyInstrument> {
        Ok(PyInstrument {
            inner: runtime::total_instrument(&self.inner, tol).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sequence(steps={}, dims={:?})", self.inner.len(), self.inner.dims())
    }
}

/// Two-step decomposition along `nu`; `reduced` shrinks the intermediate space.
#[pyfunction]
#[pyo3(signature = (t, nu, reduced = false, tol = DEFAULT_TOL))]
fn two_step(t: &PyInstrument, nu: &PyPostprocessing, reduced: bool, tol: f64) -> PyResult<PySequence> {
    let d = if reduced {
        decompose::two_step_reduced(&t.inner, &nu.inner, tol)
    } else {
        decompose::two_step(&t.inner, &nu.inner, &PathWeights::FirstPositive, tol)
    }
    .map_err(err)?;
    Ok(PySequence { inner: d.to_asi() })
}

#[pyfunction]
#[pyo3(signature = (t, chain, tol = DEFAULT_TOL))]
fn n_step(t: &PyInstrument, chain: Vec<PyPostprocessing>, tol: f64) -> PyResult<PySequence> {
    let chain: Vec<StochasticMatrix> = chain.into_iter().map(|c| c.inner).collect();
    Ok(PySequence {
        inner: decompose::n_step(&t.inner, &chain, tol).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (t, tol = DEFAULT_TOL))]
fn product_outcomes(t: &PyInstrument, tol: f64) -> PyResult<PySequence> {
    Ok(PySequence {
        inner: decompose::product_outcomes(&t.inner, tol).map_err(err)?,
    })
}

/// Smallest-ancilla sequence and, for each of its final outcomes, the original
/// outcome it merges into (`None` for padding).
#[pyfunction]
#[pyo3(signature = (t, tol = DEFAULT_TOL))]
fn min_ancilla(t: &PyInstrument, tol: f64) -> PyResult<(PySequence, Vec<Option<String>>)> {
    let m = decompose::min_ancilla(&t.inner, tol).map_err(err)?;
    let labels = m.coarse.iter().map(|c| c.map(|k| t.inner.outcomes()[k].clone())).collect();
    Ok((PySequence { inner: m.asi }, labels))
}

#[pyfunction]
#[pyo3(signature = (seq, target, tol = DEFAULT_TOL))]
fn verify(py: Python<'_>, seq: &PySequence, target: &PyInstrument, tol: f64) -> PyResult<Py<PyAny>> {
    let report = runtime::verify_equivalence(&seq.inner, &target.inner, tol).map_err(err)?;
    to_dict(py, &VerificationFile::new(&report))
}

#[pyfunction]
#[pyo3(signature = (seq, tol = DEFAULT_TOL))]
fn resources(py: Python<'_>, seq: &PySequence, tol: f64) -> PyResult<Py<PyAny>> {
    to_dict(py, &ResourceReport::from_asi(&seq.inner, tol).map_err(err)?)
}

/// Samples `shots` trajectories; `state` defaults to the maximally mixed state.
#[pyfunction]
#[pyo3(signature = (seq, state = None, shots = 10_000, seed = 0, record_intermediate = false))]
fn simulate(
    py: Python<'_>,
    seq: &PySequence,
    state: Option<Rows>,
    shots: usize,
    seed: u64,
    record_intermediate: bool,
) -> PyResult<Py<PyAny>> {
    let rho = match state {
        Some(rows) => DensityMatrix::new(to_matrix(&rows)?, DEFAULT_TOL).map_err(err)?,
        None => DensityMatrix::maximally_mixed(seq.inner.dim_in()),
    };
    let opts = RunOptions {
        shots,
        seed,
        record_intermediate,
        keep_trajectories: 0,
    };
    let (stats, _) = py.detach(|| runtime::run(&seq.inner, &rho, opts)).map_err(err)?;
    to_dict(py, &StatisticsFile::new(&stats))
}

/// Built-in example as an instrument (POVMs become their Lüders instrument).
#[pyfunction]
#[pyo3(signature = (name, alpha = None, beta = None, eta = None))]
fn example(name: &str, alpha: Option<f64>, beta: Option<f64>, eta: Option<f64>) -> PyResult<PyInstrument> {
    let params = match (alpha, beta, eta) {
        (Some(a), Some(b), Some(e)) => Some(Qubit4Params::new(a, b, e).map_err(err)?),
        (None, None, None) => None,
        _ => return Err(PyValueError::new_err("alpha, beta and eta go together")),
    };
    let inner = catalog::generate(name, params).and_then(|e| e.instrument()).map_err(err)?;
    Ok(PyInstrument { inner })
}

#[pyfunction]
fn example_postprocessing(name: &str) -> PyResult<PyPostprocessing> {
    catalog::postprocessing(name)
        .map(|inner| PyPostprocessing { inner })
        .ok_or_else(|| PyValueError::new_err(format!("no postprocessing for example {name:?}")))
}

/// Channel applying a single Kraus operator, handy for building custom steps.
#[pyfunction]
fn channel(label: &str, kraus: Rows) -> PyResult<PyInstrument> {
    let op = Operation::single(to_matrix(&kraus)?);
    Ok(PyInstrument {
        inner: iqseq::quantum::Instrument::channel(label, op),
    })
}

#[pymodule(name = "iqseq")]
fn iqseq_python(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstrument>()?;
    m.add_class::<PyPovm>()?;
    m.add_class::<PyPostprocessing>()?;
    m.add_class::<PySequence>()?;
    m.add_function(wrap_pyfunction!(two_step, m)?)?;
    m.add_function(wrap_pyfunction!(n_step, m)?)?;
    m.add_function(wrap_pyfunction!(product_outcomes, m)?)?;
    m.add_function(wrap_pyfunction!(min_ancilla, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(resources, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(example, m)?)?;
    m.add_function(wrap_pyfunction!(example_postprocessing, m)?)?;
    m.add_function(wrap_pyfunction!(channel, m)?)?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    Ok(())
}
