//! Python bindings for qipkit.
//!
//! Complex amplitudes cross the boundary as Python `complex`; matrices as
//! lists of rows. Structured results come back as plain dicts and lists.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use qipkit::protocols::{self, Bb84Config, ChshStrategy, Eavesdropper};
use qipkit::qcircuit;
use qipkit::qinfo::{self, FidelityMode};
use qipkit::qstate::{self, Keep};
use qipkit::rng::rng_from_seed;
use qipkit::{cli, qecc, ComplexMatrix};

fn err(e: qipkit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    ComplexMatrix::new(r, c, rows.into_iter().flatten().collect()).map_err(err)
}

fn from_matrix(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

/// A normalized state vector.
#[pyclass(name = "PureState", module = "qipkit", from_py_object)]
#[derive(Clone)]
pub struct PyPureState {
    inner: qstate::PureState,
}

#[pymethods]
impl PyPureState {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        qstate::PureState::new(amplitudes).map(|inner| Self { inner }).map_err(err)
    }

    /// Normalizes the given vector first.
    #[staticmethod]
    fn normalized(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        qstate::PureState::normalized(amplitudes).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn basis(dim: usize, index: usize) -> PyResult<Self> {
        qstate::PureState::basis(dim, index).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn inner_product(&self, other: &PyPureState) -> Complex64 {
        self.inner.inner(&other.inner)
    }

    /// `|<self|other>|^2`.
    fn overlap(&self, other: &PyPureState) -> f64 {
        self.inner.overlap(&other.inner)
    }

    fn tensor(&self, other: &PyPureState) -> Self {
        Self { inner: self.inner.tensor(&other.inner) }
    }

    fn apply(&self, unitary: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let u = to_matrix(unitary)?;
        self.inner.apply(&u).map(|inner| Self { inner }).map_err(err)
    }

    fn density(&self) -> PyDensityMatrix {
        PyDensityMatrix { inner: qstate::DensityMatrix::from_pure(&self.inner) }
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("PureState({:?})", self.inner.amplitudes())
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[pyclass(name = "DensityMatrix", module = "qipkit", from_py_object)]
#[derive(Clone)]
pub struct PyDensityMatrix {
    inner: qstate::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        qstate::DensityMatrix::new(to_matrix(rows)?).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn maximally_mixed(dim: usize) -> Self {
        Self { inner: qstate::DensityMatrix::maximally_mixed(dim) }
    }

    #[staticmethod]
    fn from_bloch(x: f64, y: f64, z: f64) -> PyResult<Self> {
        let b = qstate::BlochVector::new(x, y, z).map_err(err)?;
        Ok(Self { inner: qstate::DensityMatrix::from_bloch(&b) })
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        from_matrix(self.inner.matrix())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        self.inner.eigenvalues().map_err(err)
    }

    fn bloch(&self) -> PyResult<(f64, f64, f64)> {
        let b = self.inner.bloch().map_err(err)?;
        Ok((b.x, b.y, b.z))
    }

    /// Keep subsystem `"A"` or `"B"` of a `dim_a x dim_b` system.
    fn partial_trace(&self, dim_a: usize, dim_b: usize, keep: &str) -> PyResult<Self> {
        let keep = match keep {
            "A" | "a" => Keep::A,
            "B" | "b" => Keep::B,
            other => return Err(PyValueError::new_err(format!("keep must be 'A' or 'B', got {other:?}"))),
        };
        self.inner.partial_trace(dim_a, dim_b, keep).map(|inner| Self { inner }).map_err(err)
    }

    fn tensor(&self, other: &PyDensityMatrix) -> Self {
        Self { inner: self.inner.tensor(&other.inner) }
    }

    fn entropy(&self) -> PyResult<f64> {
        qinfo::von_neumann_entropy(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix({:?})", self.inner.matrix())
    }
}

/// A gate list over a fixed number of qubits.
#[pyclass(name = "Circuit", module = "qipkit")]
pub struct PyCircuit {
    inner: qcircuit::Circuit,
}

#[pymethods]
impl PyCircuit {
    /// Parse circuit text; errors carry line and column.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        qcircuit::parse_circuit(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn format(&self) -> PyResult<String> {
        qcircuit::format_circuit(&self.inner).map_err(err)
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    fn __len__(&self) -> usize {
        self.inner.gates().len()
    }

    /// Final state from `|0...0>`, or from `initial` when given.
    #[pyo3(signature = (initial=None))]
    fn run(&self, initial: Option<&PyPureState>) -> PyResult<PyPureState> {
        let start = match initial {
            Some(s) => s.inner.clone(),
            None => qstate::PureState::zeros(self.inner.qubits()).map_err(err)?,
        };
        qcircuit::apply_circuit(&self.inner, &start)
            .map(|inner| PyPureState { inner })
            .map_err(err)
    }

    fn unitary(&self) -> PyResult<Vec<Vec<Complex64>>> {
        self.inner.unitary().map(|u| from_matrix(&u)).map_err(err)
    }
}

#[pyfunction]
fn von_neumann_entropy(rho: &PyDensityMatrix) -> PyResult<f64> {
    qinfo::von_neumann_entropy(&rho.inner).map_err(err)
}

#[pyfunction]
fn fidelity(sigma: &PyDensityMatrix, omega: &PyDensityMatrix) -> PyResult<f64> {
    qinfo::fidelity(&sigma.inner, &omega.inner).map_err(err)
}

#[pyfunction]
fn trace_distance(sigma: &PyDensityMatrix, omega: &PyDensityMatrix) -> PyResult<f64> {
    qinfo::trace_distance(&sigma.inner, &omega.inner).map_err(err)
}

#[pyfunction]
fn shannon_entropy(probs: Vec<f64>) -> PyResult<f64> {
    let d = qinfo::ClassicalDistribution::new(probs).map_err(err)?;
    Ok(qinfo::shannon_entropy(&d))
}

/// Holevo quantity of a named ensemble preset.
#[pyfunction]
fn holevo_chi(ensemble: &str) -> PyResult<f64> {
    let e = cli::ensemble_preset(ensemble).map_err(err)?;
    qinfo::holevo_chi(&e).map_err(err)
}

fn strategy(name: &str) -> PyResult<ChshStrategy> {
    match name {
        "quantum" => Ok(ChshStrategy::optimal_quantum()),
        "classical" => Ok(ChshStrategy::constant_zero()),
        other => Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    }
}

#[pyfunction]
#[pyo3(signature = (strategy_name="quantum"))]
fn chsh_exact(strategy_name: &str) -> PyResult<f64> {
    protocols::chsh_exact_win_probability(&strategy(strategy_name)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (strategy_name="quantum", trials=100_000, seed=0))]
fn chsh_monte_carlo<'py>(py: Python<'py>, strategy_name: &str, trials: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let s = strategy(strategy_name)?;
    let r = protocols::chsh_monte_carlo(&s, trials, &mut rng_from_seed(seed)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n=256, eve="none", noise=0.0, seed=0))]
fn bb84<'py>(py: Python<'py>, n: usize, eve: &str, noise: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = Bb84Config::new(n, seed);
    cfg.channel_flip_prob = noise;
    cfg.eve = match eve {
        "none" => Eavesdropper::None,
        "intercept" => Eavesdropper::InterceptResend,
        other => return Err(PyValueError::new_err(format!("unknown eve {other:?}"))),
    };
    let t = protocols::bb84_run(&cfg).map_err(err)?;
    to_py(py, &t)
}

#[pyfunction]
fn dense_code(bits: (u8, u8)) -> PyResult<PyPureState> {
    protocols::dense_code([bits.0, bits.1]).map(|inner| PyPureState { inner }).map_err(err)
}

#[pyfunction]
fn dense_decode(state: &PyPureState) -> PyResult<(u8, u8)> {
    protocols::dense_decode(&state.inner).map(|b| (b[0], b[1])).map_err(err)
}

/// Returns `(bits, bob_state)`.
#[pyfunction]
#[pyo3(signature = (state, seed=0, outcome=None))]
fn teleport(state: &PyPureState, seed: u64, outcome: Option<(u8, u8)>) -> PyResult<((u8, u8), PyPureState)> {
    let r = match outcome {
        Some((a, b)) => protocols::teleport_with_outcome(&state.inner, [a, b]),
        None => protocols::teleport(&state.inner, &mut rng_from_seed(seed)),
    }
    .map_err(err)?;
    Ok(((r.bits[0], r.bits[1]), PyPureState { inner: r.bob }))
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, error="1", seed=0))]
fn ecc_pipeline<'py>(py: Python<'py>, alpha: Complex64, beta: Complex64, error: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let e = qecc::BitFlipError::parse(error).map_err(err)?;
    let r = qecc::run_pipeline(alpha, beta, e, &mut rng_from_seed(seed)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (ensemble="psi01", n=8, epsilon=0.15))]
fn compression_report<'py>(py: Python<'py>, ensemble: &str, n: usize, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let e = cli::ensemble_preset(ensemble).map_err(err)?;
    let r = qinfo::compression_report::<qipkit::rng::QRng>(&e, n, epsilon, FidelityMode::Exact, None).map_err(err)?;
    to_py(py, &r)
}

/// Run the command-line front end; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let argv = std::iter::once("qipkit".to_string()).chain(args);
    let out = cli::run(argv);
    (out.code, out.stdout, out.stderr)
}

#[pymodule]
#[pyo3(name = "qipkit")]
fn qipkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPureState>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyCircuit>()?;
    m.add_function(wrap_pyfunction!(von_neumann_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(holevo_chi, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_exact, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(bb84, m)?)?;
    m.add_function(wrap_pyfunction!(dense_code, m)?)?;
    m.add_function(wrap_pyfunction!(dense_decode, m)?)?;
    m.add_function(wrap_pyfunction!(teleport, m)?)?;
    m.add_function(wrap_pyfunction!(ecc_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(compression_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("SCHEMA", cli::SCHEMA)?;
    Ok(())
}
