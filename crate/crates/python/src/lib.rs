//! Python bindings. Structured results come back as plain dicts and lists.

use graphcanon as gc;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyType;
use serde::Serialize;

fn value_err(e: gc::Error) -> PyErr {
    match e {
        gc::Error::Io(_) | gc::Error::Csv(_) | gc::Error::Json(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable value into native Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn depth(d: u8) -> PyResult<gc::Depth> {
    gc::Depth::try_from(d).map_err(PyValueError::new_err)
}

fn parse<T: std::str::FromStr<Err = gc::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(value_err)
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "graphcanon", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: gc::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges = Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Self::build(n, edges)
    }

    #[classmethod]
    fn from_edges(_cls: &Bound<'_, PyType>, n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Self::build(n, edges)
    }

    /// Parses the `n m` header plus one `u v` line per edge.
    #[classmethod]
    fn from_edge_list(_cls: &Bound<'_, PyType>, text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: gc::read_edge_list(text).map_err(value_err)?,
        })
    }

    fn to_edge_list(&self) -> String {
        gc::write_edge_list(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        self.inner.check_vertex(v).map_err(value_err)?;
        Ok(self.inner.degree(v))
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.inner.check_vertex(v).map_err(value_err)?;
        Ok(self.inner.neighbors(v).iter().map(|&u| u as usize).collect())
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.inner.has_edge(u, v)
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    /// Returns the graph with vertex `v` renamed to `pi[v]`.
    fn permute(&self, pi: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: gc::permute(&self.inner, &pi).map_err(value_err)?,
        })
    }

    fn union(&self, other: &PyGraph) -> PyResult<Self> {
        Ok(Self {
            inner: gc::union_graph(&self.inner, &other.inner).map_err(value_err)?,
        })
    }

    fn xor(&self, other: &PyGraph) -> PyResult<Self> {
        Ok(Self {
            inner: gc::xor_graph(&self.inner, &other.inner).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __eq__(&self, other: &PyGraph) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

impl PyGraph {
    fn build(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: gc::Graph::from_edges(n, edges).map_err(value_err)?,
        })
    }
}

/// Samples G(n, p) from the given seed and stream.
#[pyfunction]
#[pyo3(signature = (n, p, seed = 0, stream = 0))]
fn generate_er(py: Python<'_>, n: usize, p: f64, seed: u64, stream: u64) -> PyResult<PyGraph> {
    let g = py
        .detach(|| gc::generate_er(n, p, gc::RngSeed::new(seed, stream)))
        .map_err(value_err)?;
    Ok(PyGraph { inner: g })
}

/// Returns a dict with `m`, `epsilon_star`, `delta` and `regime`.
#[pyfunction]
#[pyo3(signature = (n, p, regime = "random"))]
fn choose_m(py: Python<'_>, n: usize, p: f64, regime: &str) -> PyResult<Py<PyAny>> {
    let choice = gc::choose_m(n, p, parse(regime)?).map_err(value_err)?;
    to_py(py, &choice)
}

/// Rendered labels of every vertex, in vertex order.
#[pyfunction]
#[pyo3(signature = (g, depth = 3, m = None))]
fn signatures(py: Python<'_>, g: &PyGraph, depth: u8, m: Option<usize>) -> PyResult<Vec<String>> {
    let d = self::depth(depth)?;
    let table = py
        .detach(|| gc::all_signatures(&g.inner, d, m))
        .map_err(value_err)?;
    Ok((0..table.len()).map(|v| table.render(v)).collect())
}

/// Dict with `all_unique`, `duplicate_groups` and `depth`.
#[pyfunction]
#[pyo3(signature = (g, depth = 3, m = None))]
fn uniqueness(py: Python<'_>, g: &PyGraph, depth: u8, m: Option<usize>) -> PyResult<Py<PyAny>> {
    let d = self::depth(depth)?;
    let report = py
        .detach(|| gc::all_signatures(&g.inner, d, m).map(|t| gc::uniqueness_report(&t)))
        .map_err(value_err)?;
    to_py(py, &report)
}

/// Dict with `outcome`, `verified`, `m` and either `permutation` or `witness`.
#[pyfunction]
#[pyo3(signature = (g1, g2, depth = 3, m = None))]
fn match_graphs(
    py: Python<'_>,
    g1: &PyGraph,
    g2: &PyGraph,
    depth: u8,
    m: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let d = self::depth(depth)?;
    let r = py.detach(|| gc::match_by_signatures(&g1.inner, &g2.inner, d, m));
    to_py(py, &r)
}

/// Exact isomorphism by exhaustive search; small graphs only.
#[pyfunction]
fn brute_force_isomorphic(g1: &PyGraph, g2: &PyGraph) -> PyResult<Option<Vec<usize>>> {
    gc::brute_force_isomorphic(&g1.inner, &g2.inner).map_err(value_err)
}

#[pyfunction]
fn verify_isomorphism(g1: &PyGraph, g2: &PyGraph, pi: Vec<usize>) -> bool {
    gc::verify_isomorphism(&g1.inner, &g2.inner, &pi)
}

/// Color refinement to a stable coloring from degree mod `m`.
#[pyfunction]
#[pyo3(signature = (g, m, max_rounds = None))]
fn refine(py: Python<'_>, g: &PyGraph, m: usize, max_rounds: Option<usize>) -> PyResult<Py<PyAny>> {
    let s = py
        .detach(|| gc::mod_color_classes(&g.inner, m).map(|ca| gc::refine(&g.inner, &ca, max_rounds)))
        .map_err(value_err)?;
    to_py(py, &s)
}

/// Dict with `m`, `labels`, `class_count`, `all_unique` and `certificate` as bytes.
#[pyfunction]
fn canonical_label(py: Python<'_>, g: &PyGraph, m: usize) -> PyResult<Py<PyAny>> {
    let c = py
        .detach(|| gc::canonical_label(&g.inner, m))
        .map_err(value_err)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("m", c.m)?;
    out.set_item("labels", c.labels)?;
    out.set_item("class_count", c.class_count)?;
    out.set_item("all_unique", c.all_unique)?;
    out.set_item("certificate", pyo3::types::PyBytes::new(py, &c.certificate))?;
    Ok(out.into_any().unbind())
}

/// Collision report over the good vertices of a sparse graph.
#[pyfunction]
fn find_2nbr_collisions(py: Python<'_>, g: &PyGraph, p: f64) -> PyResult<Py<PyAny>> {
    let r = py.detach(|| gc::find_2nbr_collisions(&g.inner, p));
    to_py(py, &r)
}

/// One perturbed-graph trial. `base` is `empty`, `ring`, `torus`,
/// `circulant:<d>` or `file:<path>`; `p` and `m` default from `n`.
#[pyfunction]
#[pyo3(signature = (base, n, mode = "union", p = None, m = None, seed = 0, stream = 0))]
#[allow(clippy::too_many_arguments)]
fn smoothed_trial(
    py: Python<'_>,
    base: &str,
    n: usize,
    mode: &str,
    p: Option<f64>,
    m: Option<usize>,
    seed: u64,
    stream: u64,
) -> PyResult<Py<PyAny>> {
    let mut cfg = gc::SmoothedConfig::new(parse(base)?, n, parse(mode)?);
    if let Some(p) = p {
        cfg.p = p;
    }
    if let Some(m) = m {
        cfg.m = m;
    }
    let r = py
        .detach(|| gc::smoothed_trial(&cfg, gc::RngSeed::new(seed, stream)))
        .map_err(value_err)?;
    to_py(py, &r)
}

#[pyfunction]
fn binomial_pmf(k: u64, n: u64, p: f64) -> PyResult<f64> {
    gc::binomial_pmf(k, n, p).map_err(value_err)
}

#[pyfunction]
fn check_pmf_bound(py: Python<'_>, n: u64, p: f64) -> PyResult<Py<PyAny>> {
    let c = gc::check_pmf_bound(n, p).map_err(value_err)?;
    to_py(py, &c)
}

/// Runs a seeded experiment grid and returns `{"records": [...], "summary": [...]}`.
/// Give exactly one of `c` (p = c ln n / n) or `p`; `pmfgrid` needs neither.
#[pyfunction]
#[pyo3(signature = (kind, ns, c = None, p = None, trials = 10, seed = 0, m = None, depth = 3, parallel = true))]
#[allow(clippy::too_many_arguments)]
fn run_grid(
    py: Python<'_>,
    kind: &str,
    ns: Vec<usize>,
    c: Option<Vec<f64>>,
    p: Option<Vec<f64>>,
    trials: u64,
    seed: u64,
    m: Option<usize>,
    depth: u8,
    parallel: bool,
) -> PyResult<Py<PyAny>> {
    let density = match (c, p) {
        (Some(c), None) => gc::Density::C(c),
        (None, Some(p)) => gc::Density::P(p),
        (None, None) => gc::Density::Default,
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give c or p, not both")),
    };
    let mut cfg = gc::ExperimentConfig::new(parse(kind)?, ns, density, trials, seed);
    cfg.m = m;
    cfg.depth = self::depth(depth)?;
    cfg.parallel = parallel;
    let out = py.detach(|| gc::run_grid(&cfg)).map_err(value_err)?;
    to_py(py, &out)
}

/// Canonical vertex labels for random and perturbed graphs.
#[pymodule(name = "graphcanon")]
fn graphcanon_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(generate_er, m)?)?;
    m.add_function(wrap_pyfunction!(choose_m, m)?)?;
    m.add_function(wrap_pyfunction!(signatures, m)?)?;
    m.add_function(wrap_pyfunction!(uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(match_graphs, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_isomorphic, m)?)?;
    m.add_function(wrap_pyfunction!(verify_isomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_label, m)?)?;
    m.add_function(wrap_pyfunction!(find_2nbr_collisions, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_trial, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(check_pmf_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    Ok(())
}
