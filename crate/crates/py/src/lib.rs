//! Python bindings: graphs, spectral bases, the propagation similarity checks,
//! fairness metrics and multi-seed training.
//!
//! Structured reports cross the boundary as plain dicts and lists.

use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use fugnn_core::eigen as core_eigen;
use fugnn_core::error::{EigenError, GraphError, LemmaError, MetricError, ModelError};
use fugnn_core::experiment::{run_seeds, EigenConfig};
use fugnn_core::graph::{self as core_graph, OperatorMode, SbmConfig, Splits};
use fugnn_core::lemma;
use fugnn_core::metrics;
use fugnn_core::model::{Architecture, ModelConfig};
use fugnn_core::trainer::TrainConfig;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn eigen_err(e: EigenError) -> PyErr {
    match e {
        EigenError::NoConvergence { .. } | EigenError::QlFailure(_) => PyArithmeticError::new_err(e.to_string()),
        _ => value_error(e),
    }
}

fn graph_err(e: GraphError) -> PyErr {
    value_error(e)
}

fn metric_err(e: MetricError) -> PyErr {
    value_error(e)
}

fn model_err(e: ModelError) -> PyErr {
    match e {
        ModelError::NonFinite { .. } | ModelError::NonFiniteGradient { .. } | ModelError::Diverged { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        ModelError::Eigen(e) => eigen_err(e),
        _ => value_error(e),
    }
}

fn lemma_err(e: LemmaError) -> PyErr {
    match e {
        LemmaError::Invalid(_) => value_error(e),
        LemmaError::Eigen(e) => eigen_err(e),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn operator_mode(s: &str) -> PyResult<OperatorMode> {
    s.parse().map_err(PyValueError::new_err)
}

/// A JSON value as the matching Python object.
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
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
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn report_to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(value_error)?;
    to_py(py, &v)
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix rows"));
    }
    Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect()).map_err(value_error)
}

fn full_mask(mask: Option<Vec<bool>>, n: usize) -> Vec<bool> {
    mask.unwrap_or_else(|| vec![true; n])
}

/// An attributed undirected graph with a binary sensitive column and labels.
#[pyclass(module = "pyfugnn", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Graph {
    inner: core_graph::Graph,
}

#[pymethods]
impl Graph {
    /// Biased two-block stochastic block model.
    #[staticmethod]
    #[pyo3(signature = (n=2000, p_in=0.01, p_out=0.001, sensitive_homophily=0.9, label_bias=0.8, d=8, noise_sd=0.5, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn sbm(
        n: usize,
        p_in: f64,
        p_out: f64,
        sensitive_homophily: f64,
        label_bias: f64,
        d: usize,
        noise_sd: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = SbmConfig {
            n,
            p_in,
            p_out,
            sensitive_homophily,
            label_bias,
            d,
            noise_sd,
            seed,
        };
        let inner = core_graph::generate_sbm(&cfg).map_err(graph_err)?;
        Ok(Self { inner })
    }

    /// Edge list plus node table, as written by `fugnn gen`.
    #[staticmethod]
    #[pyo3(signature = (edges, nodes, sensitive="sensitive", label="label"))]
    fn load(edges: PathBuf, nodes: PathBuf, sensitive: &str, label: &str) -> PyResult<Self> {
        let inner = core_graph::load_graph(&edges, &nodes, sensitive, label).map_err(graph_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn sensitive_name(&self) -> String {
        self.inner.sensitive_name().to_string()
    }

    fn labels(&self) -> Vec<u8> {
        self.inner.labels().to_vec()
    }

    fn sensitive(&self) -> Vec<u8> {
        self.inner.sensitive()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        rows(self.inner.features())
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    /// A copy with seeded stratified train/val/test splits.
    fn with_splits(&self, seed: u64) -> PyResult<Self> {
        let splits = core_graph::make_splits(self.inner.labels(), seed).map_err(graph_err)?;
        let inner = self.inner.clone().with_splits(splits).map_err(graph_err)?;
        Ok(Self { inner })
    }

    /// Node ids per split.
    fn splits<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.splits();
        let d = PyDict::new(py);
        d.set_item("train", Splits::ids(&s.train))?;
        d.set_item("val", Splits::ids(&s.val))?;
        d.set_item("test", Splits::ids(&s.test))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={}, sensitive={:?})",
            self.inner.n(),
            self.inner.num_edges(),
            self.inner.sensitive_name()
        )
    }
}

/// Eigenpairs ordered by decreasing magnitude.
#[pyclass(module = "pyfugnn", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct SpectralBasis {
    inner: core_eigen::SpectralBasis,
}

#[pymethods]
impl SpectralBasis {
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals().to_vec()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// The n x K eigenvector matrix as a list of rows.
    fn eigenvectors(&self) -> Vec<Vec<f64>> {
        rows(self.inner.eigenvectors())
    }

    fn orthonormality_error(&self) -> f64 {
        self.inner.orthonormality_error()
    }

    fn truncated(&self, k: usize) -> PyResult<Self> {
        if k == 0 || k > self.inner.k() {
            return Err(PyValueError::new_err(format!("k must lie in [1, {}]", self.inner.k())));
        }
        Ok(Self {
            inner: self.inner.truncated(k),
        })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_binary())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let inner = core_eigen::SpectralBasis::read_binary(data).map_err(eigen_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = core_eigen::SpectralBasis::from_json(text).map_err(eigen_err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("SpectralBasis(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// Top-`k` eigenpairs of the graph operator by restarted Lanczos.
#[pyfunction]
#[pyo3(signature = (graph, k, operator="sym-normalized", tol=1e-10, max_iter=50_000, seed=0))]
fn top_k_eigenpairs(
    graph: &Graph,
    k: usize,
    operator: &str,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> PyResult<SpectralBasis> {
    let op = core_graph::normalize(&graph.inner, operator_mode(operator)?);
    let inner = core_eigen::top_k_eigenpairs(&op, k, tol, max_iter, seed)
        .map_err(eigen_err)?
        .with_operator(op.mode());
    Ok(SpectralBasis { inner })
}

/// Every eigenpair from the dense decomposition; refuses large graphs.
#[pyfunction]
#[pyo3(signature = (graph, operator="sym-normalized", dense_limit=core_eigen::DEFAULT_DENSE_LIMIT))]
fn dense_eigenpairs(graph: &Graph, operator: &str, dense_limit: usize) -> PyResult<SpectralBasis> {
    let op = core_graph::normalize(&graph.inner, operator_mode(operator)?);
    let inner = core_eigen::full_dense_eigendecomposition_with_limit(&op.matrix().to_dense(), dense_limit)
        .map_err(eigen_err)?
        .with_operator(op.mode());
    Ok(SpectralBasis { inner })
}

/// `cos⟨Sˡh, h⟩` for a dense symmetric `S`; `None` when the iterate vanishes.
#[pyfunction]
fn convolution_similarity(s: Vec<Vec<f64>>, h: Vec<f64>, l: usize) -> PyResult<Option<f64>> {
    let s = matrix(s)?;
    if s.nrows() != s.ncols() || s.nrows() != h.len() {
        return Err(PyValueError::new_err("S must be square and match h"));
    }
    lemma::convolution_similarity(&s, &h, l).map_err(lemma_err)
}

#[pyfunction]
#[pyo3(signature = (n=60, gap_min=1.5, l_max=200, seed=0))]
fn verify_lemma1<'py>(py: Python<'py>, n: usize, gap_min: f64, l_max: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = lemma::verify_lemma1(n, gap_min, l_max, seed).map_err(lemma_err)?;
    report_to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n=30, j=2, l_max=200, seed=0))]
fn verify_lemma2<'py>(py: Python<'py>, n: usize, j: usize, l_max: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = lemma::verify_lemma2(n, j, l_max, seed).map_err(lemma_err)?;
    report_to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (n=40, l_min=0, l_max=30, seed=0))]
fn verify_lemma3<'py>(py: Python<'py>, n: usize, l_min: usize, l_max: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let r = lemma::verify_lemma3(n, (l_min, l_max), seed).map_err(lemma_err)?;
    report_to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (pred, labels, mask=None))]
fn accuracy(pred: Vec<u8>, labels: Vec<u8>, mask: Option<Vec<bool>>) -> PyResult<f64> {
    let mask = full_mask(mask, pred.len());
    metrics::accuracy(&pred, &labels, &mask).map_err(metric_err)
}

/// Statistical parity gap; `None` when a group is empty.
#[pyfunction]
#[pyo3(signature = (pred, sensitive, mask=None))]
fn delta_sp(pred: Vec<u8>, sensitive: Vec<u8>, mask: Option<Vec<bool>>) -> PyResult<Option<f64>> {
    let mask = full_mask(mask, pred.len());
    metrics::delta_sp(&pred, &sensitive, &mask).map_err(metric_err)
}

/// Equal opportunity gap; `None` when a group has no positive label.
#[pyfunction]
#[pyo3(signature = (pred, labels, sensitive, mask=None))]
fn delta_eo(pred: Vec<u8>, labels: Vec<u8>, sensitive: Vec<u8>, mask: Option<Vec<bool>>) -> PyResult<Option<f64>> {
    let mask = full_mask(mask, pred.len());
    metrics::delta_eo(&pred, &labels, &sensitive, &mask).map_err(metric_err)
}

/// Trains over `seeds` and returns per-seed test reports with their
/// aggregate. `architecture` is "fugnn" or "baseline".
#[pyfunction]
#[pyo3(signature = (
    graph, basis, seeds=vec![0], architecture="fugnn", baseline_steps=10, epochs=1000, lr=0.01,
    weight_decay=5e-4, patience=100, hidden=16, layers=2, d_e=32, heads=4, operator="sym-normalized"
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    graph: &Graph,
    basis: &SpectralBasis,
    seeds: Vec<u64>,
    architecture: &str,
    baseline_steps: usize,
    epochs: usize,
    lr: f64,
    weight_decay: f64,
    patience: usize,
    hidden: usize,
    layers: usize,
    d_e: usize,
    heads: usize,
    operator: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let arch = match architecture {
        "fugnn" => Architecture::Fugnn,
        "baseline" => Architecture::Baseline { steps: baseline_steps },
        other => return Err(PyValueError::new_err(format!("unknown architecture `{other}`"))),
    };
    let model = ModelConfig {
        hidden,
        layers,
        d_e,
        heads,
        d_ff: 4 * d_e,
        ..Default::default()
    };
    let cfg = TrainConfig {
        epochs,
        lr,
        weight_decay,
        patience,
        ..Default::default()
    };
    let op = core_graph::normalize(&graph.inner, operator_mode(operator)?);
    let (report, _) = py
        .detach(|| run_seeds(&graph.inner, &basis.inner, &op, arch, &model, &cfg, &seeds))
        .map_err(model_err)?;
    report_to_py(py, &report)
}

/// Default eigensolver settings, for reference from Python.
#[pyfunction]
fn default_eigen_config<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    report_to_py(py, &EigenConfig::default())
}

#[pymodule]
pub fn pyfugnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<SpectralBasis>()?;
    m.add_function(wrap_pyfunction!(top_k_eigenpairs, m)?)?;
    m.add_function(wrap_pyfunction!(dense_eigenpairs, m)?)?;
    m.add_function(wrap_pyfunction!(convolution_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma1, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma2, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma3, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(delta_sp, m)?)?;
    m.add_function(wrap_pyfunction!(delta_eo, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(default_eigen_config, m)?)?;
    Ok(())
}
