//! Python bindings for the split-state non-malleability laboratory.
//!
//! Complex matrices cross the boundary as nested lists of `[re, im]` pairs
//! (row-major), matching the crate's JSON debug format.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qnmlab_core::harness::{AdversarySpec, NmcExperiment, ThresholdAdversary};
use qnmlab_core::nmc::{CodeContext, CodeParams, Mode};
use qnmlab_core::nmss::NmssParams;
use qnmlab_core::qmatrix::{
    canonical_purification, trace_distance, DensityOperator, RegisterLayout,
};
use rand::SeedableRng;

type CMatrix = DMatrix<Complex64>;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_py(rows: Vec<Vec<(f64, f64)>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &(re, im)) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

fn matrix_to_py(m: &CMatrix) -> Vec<Vec<(f64, f64)>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

/// A density operator over labeled registers.
#[pyclass(name = "DensityOperator")]
#[derive(Clone)]
struct PyDensityOperator {
    inner: DensityOperator,
}

#[pymethods]
impl PyDensityOperator {
    /// Build from a square matrix and `[(label, dim), ...]` layout.
    #[new]
    fn new(rows: Vec<Vec<(f64, f64)>>, layout: Vec<(String, usize)>) -> PyResult<Self> {
        let m = matrix_from_py(rows)?;
        let layout = RegisterLayout::new(layout).map_err(err)?;
        Ok(Self {
            inner: DensityOperator::new(m, layout).map_err(err)?,
        })
    }

    #[staticmethod]
    fn maximally_mixed(label: String, dim: usize) -> Self {
        Self {
            inner: DensityOperator::maximally_mixed(RegisterLayout::single(label, dim)),
        }
    }

    #[staticmethod]
    fn basis_state(label: String, dim: usize, index: usize) -> Self {
        Self {
            inner: DensityOperator::basis_state(RegisterLayout::single(label, dim), index),
        }
    }

    /// Canonical purification, appending the new register.
    fn purify(&self, new_label: String) -> PyResult<Self> {
        Ok(Self {
            inner: canonical_purification(&self.inner, &new_label)
                .map_err(err)?
                .to_density(),
        })
    }

    fn partial_trace(&self, labels: Vec<String>) -> PyResult<Self> {
        let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        Ok(Self {
            inner: qnmlab_core::qmatrix::partial_trace(&self.inner, &refs).map_err(err)?,
        })
    }

    fn trace_distance(&self, other: &PyDensityOperator) -> PyResult<f64> {
        trace_distance(&self.inner, &other.inner).map_err(err)
    }

    fn fidelity(&self, other: &PyDensityOperator) -> PyResult<f64> {
        qnmlab_core::qmatrix::fidelity(&self.inner, &other.inner).map_err(err)
    }

    fn matrix(&self) -> Vec<Vec<(f64, f64)>> {
        matrix_to_py(self.inner.matrix())
    }

    fn labels(&self) -> Vec<(String, usize)> {
        self.inner.layout().registers().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "DensityOperator(dim={}, registers={:?})",
            self.inner.dim(),
            self.inner.layout().registers()
        )
    }
}

/// The split-state code: encode/decode plus exact tampering experiments.
#[pyclass(name = "SplitStateCode")]
struct PySplitStateCode {
    ctx: CodeContext,
}

#[pymethods]
impl PySplitStateCode {
    /// Desk-scale defaults with the given mode string (`real`, `ideal-key`,
    /// `exact-uniform-clifford`, or combinations with `+`).
    #[new]
    fn new(mode: &str) -> PyResult<Self> {
        let mode = Mode::parse(mode).map_err(err)?;
        let ctx = CodeContext::new(CodeParams::desk_default(mode)).map_err(err)?;
        Ok(Self { ctx })
    }

    #[getter]
    fn params(&self, py: Python<'_>) -> PyResult<PyObject> {
        let v = serde_json::to_value(&self.ctx.params).map_err(err)?;
        json_to_py(py, &v)
    }

    /// Encode a message (with optional purification registers) and decode it
    /// back; returns the roundtrip trace distance.
    fn roundtrip_distance(&self, sigma: &PyDensityOperator, seed: u64) -> PyResult<f64> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let cw = self.ctx.enc(&sigma.inner, "M", &mut rng).map_err(err)?;
        let out = self.ctx.dec(&cw, "M").map_err(err)?;
        trace_distance(&out, &sigma.inner).map_err(err)
    }

    /// Exact privacy distances (part one, part two) for a message with
    /// purification.
    fn privacy_distances(&self, sigma: &PyDensityOperator) -> PyResult<(f64, f64)> {
        self.ctx.privacy_distances(&sigma.inner, "M").map_err(err)
    }

    /// Run a tampering experiment for a named adversary spec (JSON) against
    /// a message, returning a result dict.
    fn run_experiment(
        &self,
        py: Python<'_>,
        adversary_json: &str,
        sigma: &PyDensityOperator,
    ) -> PyResult<PyObject> {
        let spec: AdversarySpec = serde_json::from_str(adversary_json).map_err(err)?;
        let adv = spec
            .build(
                self.ctx.params.ell,
                self.ctx.params.delta_ell(),
                self.ctx.params.b,
            )
            .map_err(err)?;
        let exp = NmcExperiment::new(&self.ctx, &adv).map_err(err)?;
        let outcome = exp.nm_check(&sigma.inner).map_err(err)?;
        let dict = PyDict::new_bound(py);
        dict.set_item("adversary", adv.name.clone())?;
        dict.set_item("p_same", outcome.simulator.p_same)?;
        dict.set_item("p_epr", outcome.simulator.p_epr)?;
        dict.set_item("p_a", outcome.simulator.p_a)?;
        dict.set_item("epsilon_measured", outcome.epsilon_measured)?;
        dict.set_item(
            "final_state",
            matrix_to_py(outcome.eta.matrix()).into_py(py),
        )?;
        Ok(dict.into())
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<PyObject> {
    let s = serde_json::to_string(v).map_err(err)?;
    let json = py.import_bound("json")?;
    Ok(json.call_method1("loads", (s,))?.into())
}

/// Sizes and sampler facts of the special Clifford subgroup.
#[pyfunction]
fn subgroup_info(py: Python<'_>, qubits: usize) -> PyResult<PyObject> {
    let sc = qnmlab_core::pauli::sc_enumerate(qubits).map_err(err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("size", sc.len())?;
    dict.set_item("expected_size", qnmlab_core::pauli::sc_size(qubits))?;
    dict.set_item("key_bits", 5 * qubits)?;
    Ok(dict.into())
}

/// Run the exhaustive algebra-identity suite; returns the residual report.
#[pyfunction]
#[pyo3(signature = (qubits = 1, seed = 7))]
fn verify_algebra(py: Python<'_>, qubits: usize, seed: u64) -> PyResult<PyObject> {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let report = qnmlab_core::pauli::verify_algebra(qubits, &mut rng).map_err(err)?;
    let all_pass = report.all_pass();
    let v = serde_json::to_value(&report).map_err(err)?;
    let obj = json_to_py(py, &v)?;
    let dict = obj.downcast_bound::<PyDict>(py)?;
    dict.set_item("all_pass", all_pass)?;
    Ok(dict.clone().into())
}

/// Rate table rows for the given deltas.
#[pyfunction]
fn rate_table(py: Python<'_>, deltas: Vec<f64>) -> PyResult<PyObject> {
    let rows = qnmlab_core::nmc::rate_table(&deltas);
    let out: Vec<PyObject> = rows
        .iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("delta", r.delta).unwrap();
            d.set_item("rate", r.rate).unwrap();
            d.set_item("n_over_ell", r.n_over_ell).unwrap();
            d.set_item("bmax_over_ell", r.bmax_over_ell).unwrap();
            d.into()
        })
        .collect();
    Ok(out.into_py(py))
}

/// Exhaustively certify a seeded extractor table; returns the report.
#[pyfunction]
fn certify_nmext(py: Python<'_>, n: usize, m: usize, r: usize, seed: u64) -> PyResult<PyObject> {
    let d = qnmlab_core::extractors::NmExtDescriptor::random_table(n, m, r, seed).map_err(err)?;
    let report = qnmlab_core::extractors::nmext_certify_classical(
        &d,
        &qnmlab_core::extractors::TamperFamily::Structured,
        1e-9,
    )
    .map_err(err)?;
    json_to_py(py, &serde_json::to_value(&report).map_err(err)?)
}

/// Run the identity threshold-tampering experiment against the composed
/// scheme and report its measured quantities.
#[pyfunction]
fn nmss_identity_experiment(py: Python<'_>) -> PyResult<PyObject> {
    let prm = NmssParams::desk_default(Mode::IDEAL_EXACT);
    let adv = ThresholdAdversary::identity(&prm);
    let outcome = qnmlab_core::harness::run_nmss_experiment(&adv, &prm).map_err(err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("p_a", outcome.p_a)?;
    dict.set_item("epsilon_measured", outcome.epsilon_measured)?;
    dict.set_item("p_x_same", outcome.p_x_same)?;
    dict.set_item("overflow_weight", outcome.overflow_weight)?;
    Ok(dict.into())
}

#[pymodule]
fn qnmlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityOperator>()?;
    m.add_class::<PySplitStateCode>()?;
    m.add_function(wrap_pyfunction!(subgroup_info, m)?)?;
    m.add_function(wrap_pyfunction!(verify_algebra, m)?)?;
    m.add_function(wrap_pyfunction!(rate_table, m)?)?;
    m.add_function(wrap_pyfunction!(certify_nmext, m)?)?;
    m.add_function(wrap_pyfunction!(nmss_identity_experiment, m)?)?;
    Ok(())
}
