use henon::cantor::{cantor_sample, Hierarchy};
use henon::geometry::box_metrics;
use henon::maps::{family_2d_distorted, family_t, toy_model, HenonMap, DEFAULT_BUDGET};
use henon::renorm::{build_tower, tune_parameter, RenormTower, Settings};
use henon::surfaces::{graph_transform, SurfaceGraph};
use henon::universality::doubling::{self, FEIGENBAUM_POINT};
use henon::universality::{average_jacobian, tilt_scaling};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(henon_py, MathError, PyException, "Numerical or convergence failure.");

fn err(e: henon::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        MathError::new_err(e.to_string())
    }
}

/// Hands a serializable report to Python as plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn point(p: &[f64]) -> PyResult<[f64; 3]> {
    match p.len() {
        2 => Ok([p[0], p[1], 0.0]),
        3 => Ok([p[0], p[1], p[2]]),
        n => Err(PyValueError::new_err(format!("expected 2 or 3 coordinates, got {n}"))),
    }
}

#[pyclass(name = "HenonMap", module = "henon_py", from_py_object)]
#[derive(Clone)]
struct PyMap {
    inner: HenonMap,
}

#[pymethods]
impl PyMap {
    /// `(c − x² − b y (1 + k x), x)`.
    #[staticmethod]
    #[pyo3(signature = (c, b, k = 0.0))]
    fn planar(c: f64, b: f64, k: f64) -> PyResult<Self> {
        family_2d_distorted(c, b, k, DEFAULT_BUDGET).map(|inner| Self { inner }).map_err(err)
    }

    /// `(c − x² − b₁ y + t z, x, b₂ z + γ y)`.
    #[staticmethod]
    #[pyo3(signature = (c, b1, b2, coupling, t = 0.0))]
    fn toy(c: f64, b1: f64, b2: f64, coupling: f64, t: f64) -> PyResult<Self> {
        let m = toy_model(c, b1, b2, coupling, DEFAULT_BUDGET).map_err(err)?;
        let inner = if t == 0.0 { m } else { family_t(&m, t, 2.0 * t.abs()).map_err(err)? };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        HenonMap::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    #[getter]
    fn eps_norm(&self) -> f64 {
        self.inner.eps_norm()
    }

    #[getter]
    fn delta_norm(&self) -> f64 {
        self.inner.delta_norm()
    }

    fn __call__(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&p).map_err(err)
    }

    fn jacobian(&self, p: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.jacobian(&p).map_err(err)
    }

    fn jac_det(&self, p: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.jac_det(point(&p)?))
    }

    /// Renormalizes up to `depth` times; stops quietly at the first failure.
    #[pyo3(signature = (depth))]
    fn tower(&self, depth: usize) -> Tower {
        let rep = build_tower(&self.inner, depth, &Settings::default());
        Tower { inner: rep.tower, stopped: rep.stopped.map(|e| e.to_string()) }
    }

    fn __repr__(&self) -> String {
        format!("HenonMap(dims={}, eps_norm={:e})", self.inner.dims(), self.inner.eps_norm())
    }
}

#[pyclass(module = "henon_py")]
struct Tower {
    inner: RenormTower,
    #[pyo3(get)]
    stopped: Option<String>,
}

#[pymethods]
impl Tower {
    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn map(&self, k: usize) -> PyResult<PyMap> {
        self.inner
            .maps
            .get(k)
            .map(|m| PyMap { inner: m.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("level {k} beyond depth {}", self.inner.depth())))
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.summary())
    }

    fn hierarchy(&self) -> PyResult<Cantor> {
        Hierarchy::from_tower(&self.inner, &Settings::default()).map(|inner| Cantor { inner }).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.maps.len()
    }
}

/// Nested box structure of the critical Cantor set.
#[pyclass(module = "henon_py")]
struct Cantor {
    inner: Hierarchy,
}

#[pymethods]
impl Cantor {
    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn tips(&self) -> PyResult<Vec<[f64; 3]>> {
        self.inner.tips().map_err(err)
    }

    /// One Cantor point per level-`n` box, indexed by address.
    fn sample(&self, n: usize) -> PyResult<Vec<[f64; 3]>> {
        cantor_sample(&self.inner, n).map(|s| s.points).map_err(err)
    }

    fn average_jacobian<'py>(&self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &average_jacobian(&self.inner, n).map_err(err)?)
    }

    fn tilts<'py>(&self, py: Python<'py>, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &tilt_scaling(&self.inner, k_max).map_err(err)?)
    }

    /// Gap-to-diameter ratio of the sibling boxes `v^k c v^{n−k−1}`.
    fn box_metrics<'py>(&self, py: Python<'py>, k: usize, n: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &box_metrics(&self.inner, k, n).map_err(err)?)
    }
}

#[pyclass(module = "henon_py")]
struct Surface {
    inner: SurfaceGraph,
}

#[pymethods]
impl Surface {
    #[getter]
    fn defect(&self) -> f64 {
        self.inner.defect
    }

    #[getter]
    fn changes(&self) -> Vec<f64> {
        self.inner.changes.clone()
    }

    fn height(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.height_at(x, y).map_err(err)
    }
}

/// Tunes a planar or toy family to its accumulation parameter at depth `n`.
#[pyfunction]
#[pyo3(signature = (b, n, b2 = None, coupling = 0.0))]
fn tune(b: f64, n: usize, b2: Option<f64>, coupling: f64) -> PyResult<(f64, Tower)> {
    let settings = Settings::default();
    let seed = if b > 0.0 { henon::geometry::accumulation_guess(b) } else { FEIGENBAUM_POINT };
    let tuned = match b2 {
        Some(b2) => tune_parameter(&|c| toy_model(c, b, b2, coupling, DEFAULT_BUDGET), seed, n, &settings),
        None => tune_parameter(&|c| family_2d_distorted(c, b, 0.0, DEFAULT_BUDGET), seed, n, &settings),
    }
    .map_err(err)?;
    Ok((tuned.c, Tower { inner: tuned.tower, stopped: None }))
}

#[pyfunction]
#[pyo3(signature = (map, max_iters = 40, tol = 1e-13))]
fn invariant_surface(map: &PyMap, max_iters: usize, tol: f64) -> PyResult<Surface> {
    graph_transform(&map.inner, None, max_iters, tol).map(|inner| Surface { inner }).map_err(err)
}

/// Scaling `λ` of the one-dimensional doubling fixed point.
#[pyfunction]
fn doubling_scaling() -> f64 {
    doubling::standard_lambda()
}

/// Superstable parameters of `c − x²` for periods `2⁰ … 2^n_max`.
#[pyfunction]
fn superstable_parameters(n_max: usize) -> PyResult<Vec<f64>> {
    doubling::superstable_parameters(n_max).map_err(err)
}

#[pymodule]
fn henon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_class::<Tower>()?;
    m.add_class::<Cantor>()?;
    m.add_class::<Surface>()?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_surface, m)?)?;
    m.add_function(wrap_pyfunction!(doubling_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(superstable_parameters, m)?)?;
    m.add("MathError", m.py().get_type::<MathError>())?;
    m.add("FEIGENBAUM_POINT", FEIGENBAUM_POINT)?;
    Ok(())
}
