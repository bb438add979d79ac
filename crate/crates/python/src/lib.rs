//! Python bindings: load and run configurations, inspect archives, and
//! compute map-quality metrics and rank tests from Python.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mapelites::config::{load_config, parse_config, Loaded};
use mapelites::experiment::{self, RunResult as CoreRunResult};
use mapelites::metrics::{MetricsReport, ReferenceMap, METRIC_NAMES};
use mapelites::DenseMap;

fn to_py(e: mapelites::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A single-run configuration.
#[pyclass(name = "RunConfig", module = "mapelites_py", skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: mapelites::config::RunConfig,
}

fn expect_run(loaded: Loaded) -> PyResult<PyRunConfig> {
    match loaded {
        Loaded::Run(c) => Ok(PyRunConfig { inner: *c }),
        Loaded::Experiment(_) => Err(PyValueError::new_err(
            "this is an experiment manifest; use run_experiment",
        )),
    }
}

#[pymethods]
impl PyRunConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        expect_run(parse_config(text).map_err(to_py)?)
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        expect_run(load_config(&path).map_err(to_py)?)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn threads(&self) -> usize {
        self.inner.threads
    }

    #[setter]
    fn set_threads(&mut self, threads: usize) {
        self.inner.threads = threads;
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.as_str()
    }

    #[getter]
    fn budget(&self) -> u64 {
        self.inner.budget
    }

    #[getter]
    fn final_resolution(&self) -> Vec<usize> {
        self.inner.final_resolution().to_vec()
    }

    /// The configuration with every default filled in, as TOML.
    fn effective_toml(&self) -> String {
        self.inner.effective_toml()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(algorithm={:?}, seed={}, budget={})",
            self.inner.algorithm.as_str(),
            self.inner.seed,
            self.inner.budget
        )
    }
}

/// One archive entry.
#[pyclass(name = "Elite", module = "mapelites_py", get_all, frozen)]
struct PyElite {
    cell: Vec<usize>,
    id: u64,
    fitness: f64,
    descriptor: Vec<f64>,
    genome: String,
}

#[pyclass(name = "RunResult", module = "mapelites_py")]
struct PyRunResult {
    inner: CoreRunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn evaluations(&self) -> u64 {
        self.inner.summary.evaluations
    }

    #[getter]
    fn filled(&self) -> usize {
        self.inner.summary.filled
    }

    #[getter]
    fn best_fitness(&self) -> Option<f64> {
        self.inner.summary.best_fitness
    }

    #[getter]
    fn resolution(&self) -> Vec<usize> {
        self.inner.archive.resolution().to_vec()
    }

    fn elites(&self) -> Vec<PyElite> {
        self.inner
            .archive
            .iter()
            .map(|(cell, e)| PyElite {
                cell: cell.coords().to_vec(),
                id: e.id,
                fitness: e.fitness,
                descriptor: e.descriptor.clone(),
                genome: e.genome.clone(),
            })
            .collect()
    }

    /// Best fitness per cell in row-major order, `None` for empty cells.
    fn dense_map(&self) -> Vec<Option<f64>> {
        self.inner.dense_map().values
    }

    /// Archive CSV text, byte-identical to the run directory's `archive.csv`.
    fn archive_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner
            .archive
            .write_csv(&mut buf, |g| g.clone())
            .map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Runs a configuration in memory.
#[pyfunction]
fn run(py: Python<'_>, config: &PyRunConfig) -> PyResult<PyRunResult> {
    let c = config.inner.clone();
    let inner = py.detach(move || experiment::execute(&c)).map_err(to_py)?;
    Ok(PyRunResult { inner })
}

/// Runs a configuration and writes its run directory.
#[pyfunction]
fn run_to_dir(py: Python<'_>, config: &PyRunConfig, dir: PathBuf) -> PyResult<PyRunResult> {
    let c = config.inner.clone();
    let inner = py
        .detach(move || experiment::run_single(&c, &dir))
        .map_err(to_py)?;
    Ok(PyRunResult { inner })
}

/// Runs an experiment manifest into `dir` and returns the report text.
#[pyfunction]
fn run_experiment(py: Python<'_>, manifest: PathBuf, dir: PathBuf) -> PyResult<String> {
    let m = match load_config(&manifest).map_err(to_py)? {
        Loaded::Experiment(m) => m,
        Loaded::Run(_) => return Err(PyValueError::new_err("not an experiment manifest")),
    };
    let out = py
        .detach(move || experiment::run_experiment(&m, &dir))
        .map_err(to_py)?;
    Ok(out.report.text)
}

/// Map-quality metrics of `map` against the cellwise best of `maps`.
///
/// Every map is a flat row-major list with `None` for empty cells.
#[pyfunction]
fn metrics<'py>(
    py: Python<'py>,
    map: Vec<Option<f64>>,
    maps: Vec<Vec<Option<f64>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let dense = |v: Vec<Option<f64>>| DenseMap {
        resolution: vec![v.len()],
        values: v,
    };
    let all: Vec<DenseMap> = maps.into_iter().map(dense).collect();
    let reference = ReferenceMap::build(all.iter()).map_err(to_py)?;
    let report = MetricsReport::compute(&dense(map), &reference).map_err(to_py)?;
    let d = PyDict::new(py);
    for name in METRIC_NAMES {
        d.set_item(name, report.get(name))?;
    }
    d.set_item("filled", report.filled)?;
    Ok(d)
}

/// Two-tailed Mann-Whitney U test, returning `(u, p, exact)`.
#[pyfunction]
fn mann_whitney_u(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, bool)> {
    if a.is_empty() || b.is_empty() {
        return Err(PyValueError::new_err("both samples must be non-empty"));
    }
    let r = mapelites::stats::mann_whitney_u(&a, &b);
    Ok((r.u, r.p, r.exact))
}

/// Tip position of the three-joint arm for servo step commands.
#[pyfunction]
fn forward_kinematics(steps: [i32; 3]) -> PyResult<(f64, f64)> {
    mapelites::domains::arm::forward_kinematics(steps).map_err(to_py)
}

/// Greedy modularity partition of a directed graph, as `(q, labels)`.
#[pyfunction]
fn greedy_modularity(nodes: usize, edges: Vec<(usize, usize)>) -> PyResult<(f64, Vec<usize>)> {
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= nodes || b >= nodes) {
        return Err(PyValueError::new_err(format!("edge ({a}, {b}) outside {nodes} nodes")));
    }
    let p = mapelites::domains::modularity::greedy_modularity(nodes, &edges);
    Ok((p.q, p.labels))
}

#[pymodule]
fn mapelites_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyElite>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_to_dir, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_modularity, m)?)?;
    m.add("OUTPUT_ROOT_ENV", experiment::OUTPUT_ROOT_ENV)?;
    Ok(())
}
