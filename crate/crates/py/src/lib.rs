//! Python bindings for loglens.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use loglens::app::{parse_report_text, run_job, JobSpec};
use loglens::cluster::{dbscan_fit, kmeans_fit, ClusterAssignment, DbscanConfig, KMeansConfig};
use loglens::detect_seq::{detect_sequence, ngram_fit, FlagLevel, NextEventModel, TopKConfig};
use loglens::detect_stat::{self, iforest_fit_score, lof_score, AnomalyResult, DivergenceKind, IForestConfig, LofConfig};
use loglens::evaluate::{self, MetricsReport};
use loglens::log_model::{load_str, FileFormat, LoaderConfig};
use loglens::parse::{self, ParserAlgorithm, ParserConfig};
use loglens::preprocess::{self, PreprocessorConfig};
use loglens::represent::{EventSequenceSet, FeatureMatrix};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn algorithm(name: &str) -> PyResult<ParserAlgorithm> {
    match name {
        "drain" => Ok(ParserAlgorithm::Drain),
        "iplom" => Ok(ParserAlgorithm::Iplom),
        "ael" => Ok(ParserAlgorithm::Ael),
        other => Err(value_err(format!("unknown parser `{other}`"))),
    }
}

/// Records loaded from text, one field per column.
#[pyclass(name = "LogBatch", module = "loglens_py")]
#[derive(Clone)]
struct PyLogBatch {
    inner: loglens::LogRecordBatch,
}

#[pymethods]
impl PyLogBatch {
    /// Batch whose records carry only a body.
    #[staticmethod]
    fn from_bodies(bodies: Vec<String>) -> Self {
        PyLogBatch {
            inner: loglens::LogRecordBatch::from_bodies(&bodies),
        }
    }

    /// Parses raw log text. Lines that do not match `line_pattern` become body-only records.
    #[staticmethod]
    #[pyo3(signature = (text, line_pattern=None, timestamp_format=None))]
    fn from_text(text: &str, line_pattern: Option<String>, timestamp_format: Option<String>) -> PyResult<Self> {
        let config = LoaderConfig {
            line_pattern,
            timestamp_format,
            ..LoaderConfig::new("<python>", FileFormat::Log)
        };
        let outcome = load_str(text, &config).map_err(value_err)?;
        Ok(PyLogBatch { inner: outcome.batch })
    }

    /// Copy with default cleaning applied to every body.
    fn cleaned(&self) -> PyResult<Self> {
        let (inner, _) = preprocess::clean(&self.inner, &PreprocessorConfig::default()).map_err(value_err)?;
        Ok(PyLogBatch { inner })
    }

    #[getter]
    fn bodies(&self) -> Vec<String> {
        self.inner.bodies().to_vec()
    }

    #[getter]
    fn timestamps(&self) -> Vec<Option<String>> {
        self.inner.timestamps().iter().map(|t| t.map(|t| t.to_rfc3339())).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<Option<bool>> {
        self.inner.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("LogBatch({} records)", self.inner.len())
    }
}

#[pyclass(name = "ParseResult", module = "loglens_py")]
struct PyParseResult {
    inner: parse::ParseResult,
}

#[pymethods]
impl PyParseResult {
    #[getter]
    fn line_template_ids(&self) -> Vec<u32> {
        self.inner.line_template_ids.clone()
    }

    /// `(id, template, count)` per mined template.
    #[getter]
    fn templates(&self) -> Vec<(u32, String, usize)> {
        self.inner.templates.iter().map(|t| (t.id, t.render(), t.count)).collect()
    }

    #[getter]
    fn parameter_lists(&self) -> Vec<Vec<String>> {
        self.inner.parameter_lists.clone()
    }

    fn reconstruct(&self, line: usize) -> PyResult<Vec<String>> {
        if line >= self.inner.len() {
            return Err(value_err(format!("line {line} out of range")));
        }
        Ok(self.inner.reconstruct(line))
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.inner.to_bytes()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Mines templates from a batch.
#[pyfunction]
#[pyo3(signature = (batch, algorithm="drain", mask_digits=false, threads=None))]
fn parse_batch(batch: &PyLogBatch, algorithm: &str, mask_digits: bool, threads: Option<usize>) -> PyResult<PyParseResult> {
    let mut config = ParserConfig::with_algorithm(self::algorithm(algorithm)?);
    config.mask_digits = mask_digits;
    let inner = match threads {
        Some(n) => parse::parse_with_threads(&batch.inner, &config, n),
        None => parse::parse(&batch.inner, &config),
    }
    .map_err(value_err)?;
    Ok(PyParseResult { inner })
}

fn clusters_dict<'py>(py: Python<'py>, a: ClusterAssignment) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("clusters", a.cluster_count())?;
    d.set_item("labels", a.labels)?;
    d.set_item("centroids", a.centroids)?;
    d.set_item("inertia", a.inertia)?;
    d.set_item("core_points", a.core_points)?;
    Ok(d)
}

fn anomaly_dict<'py>(py: Python<'py>, r: AnomalyResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("row_ids", r.row_ids)?;
    d.set_item("scores", r.scores)?;
    d.set_item("flags", r.flags)?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("method", r.method)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (rows, k, seed=0))]
fn kmeans(py: Python<'_>, rows: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    let a = kmeans_fit(&FeatureMatrix::from_rows(&rows), &KMeansConfig::new(k, seed)).map_err(value_err)?;
    clusters_dict(py, a)
}

#[pyfunction]
fn dbscan(py: Python<'_>, rows: Vec<Vec<f64>>, eps: f64, min_pts: usize) -> PyResult<Bound<'_, PyDict>> {
    let a = dbscan_fit(&FeatureMatrix::from_rows(&rows), &DbscanConfig { eps, min_pts }).map_err(value_err)?;
    clusters_dict(py, a)
}

#[pyfunction]
#[pyo3(signature = (rows, n_trees=100, subsample=256, seed=0, threshold=0.5))]
fn isolation_forest(
    py: Python<'_>,
    rows: Vec<Vec<f64>>,
    n_trees: usize,
    subsample: usize,
    seed: u64,
    threshold: f64,
) -> PyResult<Bound<'_, PyDict>> {
    let config = IForestConfig {
        n_trees,
        subsample,
        seed,
        threshold,
    };
    let r = iforest_fit_score(&FeatureMatrix::from_rows(&rows), &config).map_err(value_err)?;
    anomaly_dict(py, r)
}

#[pyfunction]
#[pyo3(signature = (rows, k=10, threshold=1.5))]
fn lof(py: Python<'_>, rows: Vec<Vec<f64>>, k: usize, threshold: f64) -> PyResult<Bound<'_, PyDict>> {
    let r = lof_score(&FeatureMatrix::from_rows(&rows), &LofConfig { k, threshold }).map_err(value_err)?;
    anomaly_dict(py, r)
}

/// `kind` is "kl" or "js".
#[pyfunction]
#[pyo3(signature = (p, q, kind="js"))]
fn divergence(p: Vec<f64>, q: Vec<f64>, kind: &str) -> PyResult<f64> {
    let kind = match kind {
        "kl" => DivergenceKind::Kl,
        "js" => DivergenceKind::Js,
        other => return Err(value_err(format!("unknown measure `{other}`"))),
    };
    detect_stat::divergence(&p, &q, kind).map_err(value_err)
}

/// Next-event n-gram model over template id sequences.
#[pyclass(name = "NgramModel", module = "loglens_py")]
struct PyNgramModel {
    inner: NextEventModel,
}

#[pymethods]
impl PyNgramModel {
    #[staticmethod]
    #[pyo3(signature = (sequences, order=2, backoff=true))]
    fn fit(sequences: Vec<Vec<u32>>, order: usize, backoff: bool) -> PyResult<Self> {
        let inner = ngram_fit(&EventSequenceSet::from_sequences(sequences), order, backoff).map_err(value_err)?;
        Ok(PyNgramModel { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyNgramModel {
            inner: NextEventModel::from_text(text).map_err(value_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Flags sequences (or single events with `event_level`) outside the top k.
    #[pyo3(signature = (sequences, k=10, window=None, event_level=false))]
    fn detect<'py>(
        &self,
        py: Python<'py>,
        sequences: Vec<Vec<u32>>,
        k: usize,
        window: Option<usize>,
        event_level: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let config = TopKConfig {
            k,
            window,
            flag_level: if event_level { FlagLevel::Event } else { FlagLevel::Partition },
        };
        let r = detect_sequence(&self.inner, &EventSequenceSet::from_sequences(sequences), &config).map_err(value_err)?;
        anomaly_dict(py, r)
    }
}

fn metrics_dict(py: Python<'_>, m: MetricsReport) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("tp", m.tp)?;
    d.set_item("fp", m.fp)?;
    d.set_item("fn", m.fn_)?;
    d.set_item("tn", m.tn)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    Ok(d)
}

/// Confusion counts with precision, recall and F1.
#[pyfunction]
fn confusion(py: Python<'_>, flags: Vec<bool>, labels: Vec<bool>) -> PyResult<Bound<'_, PyDict>> {
    metrics_dict(py, evaluate::confusion_and_f1(&flags, &labels).map_err(value_err)?)
}

#[pyfunction]
fn auroc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    evaluate::auroc(&scores, &labels).map_err(value_err)
}

/// Field errors of a YAML job document; empty when it is valid.
#[pyfunction]
fn validate_job(yaml: &str) -> PyResult<Vec<(String, String)>> {
    let spec = JobSpec::from_yaml(yaml).map_err(value_err)?;
    Ok(spec.validate().into_iter().map(|e| (e.field, e.message)).collect())
}

/// Runs a YAML job and returns its report sections plus the rendered text.
#[pyfunction]
fn run_job_yaml<'py>(py: Python<'py>, yaml: &str) -> PyResult<Bound<'py, PyDict>> {
    let spec = JobSpec::from_yaml(yaml).map_err(value_err)?;
    let report = py.allow_threads(|| run_job(&spec)).map_err(value_err)?;
    let text = report.render();
    let d = PyDict::new_bound(py);
    d.set_item("sections", parse_report_text(&text))?;
    d.set_item("text", text)?;
    Ok(d)
}

#[pymodule]
fn loglens_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLogBatch>()?;
    m.add_class::<PyParseResult>()?;
    m.add_class::<PyNgramModel>()?;
    m.add_function(wrap_pyfunction!(parse_batch, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(dbscan, m)?)?;
    m.add_function(wrap_pyfunction!(isolation_forest, m)?)?;
    m.add_function(wrap_pyfunction!(lof, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(validate_job, m)?)?;
    m.add_function(wrap_pyfunction!(run_job_yaml, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
