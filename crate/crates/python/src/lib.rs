//! Python module `reflecta_py`.
//!
//! Structured reports come back as plain dicts (via their JSON form).

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use reflecta::bezdek::{self, BezdekConfig};
use reflecta::body::{self, BodySpec, ClassifyConfig, DirectionScanConfig, OrthoScanConfig, ReflectionConfig};
use reflecta::linalg::{Matrix, SymMatrix, Vector};
use reflecta::quadric::{self, ProjHyperplane, ProjLine};
use reflecta::section::{self, CoverScanConfig, FiberTolerances};

create_exception!(reflecta_py, ReflectaError, PyException);

fn err(e: reflecta::Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    if e.is_numerical() {
        PyRuntimeError::new_err(msg)
    } else {
        PyValueError::new_err(msg)
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ReflectaError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn vector(v: Vec<f64>) -> Vector {
    Vector::from_vec(v)
}

fn line(v: Vec<f64>) -> PyResult<ProjLine> {
    ProjLine::from_slice(&v).map_err(err)
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Ellipsoid `{x : (x−c)ᵀA(x−c) ≤ 1}`.
#[pyclass(module = "reflecta_py", frozen)]
struct Ellipsoid {
    inner: quadric::Ellipsoid,
}

#[pymethods]
impl Ellipsoid {
    #[new]
    #[pyo3(signature = (form, center=None))]
    fn new(form: Vec<Vec<f64>>, center: Option<Vec<f64>>) -> PyResult<Self> {
        let form = SymMatrix::from_rows(&form).map_err(err)?;
        let c = center.map(vector).unwrap_or_else(|| Vector::zeros(form.dim()));
        Ok(Ellipsoid {
            inner: quadric::Ellipsoid::new(c, form).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (semi_axes, rotation=None, center=None))]
    fn from_semi_axes(semi_axes: Vec<f64>, rotation: Option<Vec<Vec<f64>>>, center: Option<Vec<f64>>) -> PyResult<Self> {
        let rot = rotation.as_deref().map(matrix).transpose()?;
        Ok(Ellipsoid {
            inner: quadric::Ellipsoid::from_semi_axes(&semi_axes, rot.as_ref(), center.map(vector)).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn form(&self) -> Vec<Vec<f64>> {
        self.inner.form().to_rows()
    }

    #[getter]
    fn center(&self) -> Vec<f64> {
        self.inner.center().iter().copied().collect()
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        self.inner.contains(&vector(x))
    }

    /// Eigenvalue groups by decreasing binormal length.
    #[pyo3(signature = (grouping_tol=quadric::DEFAULT_GROUPING_TOL))]
    fn spectrum<'py>(&self, py: Python<'py>, grouping_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let p = quadric::spectrum_partition(&self.inner, grouping_tol).map_err(err)?;
        let groups: Vec<serde_json::Value> = p
            .groups
            .iter()
            .map(|g| {
                serde_json::json!({
                    "eigenvalue": g.eigenvalue,
                    "lambda": g.binormal_length,
                    "basis": g.basis.iter().map(|b| b.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                })
            })
            .collect();
        to_py(py, &serde_json::json!({"k": p.k, "lambdas": p.lengths(), "dims": p.dims(), "groups": groups}))
    }

    /// Unit normal of the mirror hyperplane `M(ℓ)`.
    fn mirror(&self, l: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(quadric::mirror(&self.inner, &line(l)?).map_err(err)?.to_vec())
    }

    /// Linear part of the reflection with direction `ℓ`.
    fn reflection(&self, l: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&quadric::reflection_in_direction(&self.inner, &line(l)?).map_err(err)?.linear))
    }

    fn chord_length(&self, l: Vec<f64>) -> PyResult<f64> {
        Ok(quadric::chord_length(&self.inner, &line(l)?))
    }

    #[pyo3(signature = (l, tol=quadric::DEFAULT_BINORMAL_TOL))]
    fn is_binormal(&self, l: Vec<f64>, tol: f64) -> PyResult<bool> {
        Ok(quadric::is_binormal(&self.inner, &line(l)?, tol))
    }

    /// Normal of the ground hyperplane of a diagonal line.
    #[pyo3(signature = (l, tol=quadric::DEFAULT_BINORMAL_TOL))]
    fn ground(&self, l: Vec<f64>, tol: f64) -> PyResult<Vec<f64>> {
        Ok(quadric::ground(&self.inner, &line(l)?, tol).map_err(err)?.to_vec())
    }

    fn fiber<'py>(&self, py: Python<'py>, normal: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let g = ProjHyperplane::from_slice(&normal).map_err(err)?;
        to_py(py, &section::fiber(&self.inner, &g, &FiberTolerances::scan()).map_err(err)?)
    }

    #[pyo3(signature = (samples=1000, seed=0))]
    fn cover_scan<'py>(&self, py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let config = CoverScanConfig {
            samples,
            seed,
            ..Default::default()
        };
        to_py(py, &section::cover_scan(&self.inner, &config).map_err(err)?)
    }

    /// Sheet permutation around a chart loop centered at `normal`.
    #[pyo3(signature = (normal, radius=0.1, steps=64))]
    fn monodromy<'py>(&self, py: Python<'py>, normal: Vec<f64>, radius: f64, steps: usize) -> PyResult<Bound<'py, PyAny>> {
        let g = ProjHyperplane::from_slice(&normal).map_err(err)?;
        let path = section::chart_loop(&g, radius, steps, None).map_err(err)?;
        to_py(py, &section::track_fiber(&self.inner, &path, &Default::default()).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Ellipsoid(dim={}, center={:?})", self.inner.dim(), self.center())
    }
}

/// Convex body given by a membership oracle.
#[pyclass(module = "reflecta_py", frozen)]
struct Body {
    inner: body::BodyOracle,
}

#[pymethods]
impl Body {
    /// Builds a body from a JSON spec (`{"kind": "ellipsoid" | "revolution" | ...}`).
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        Ok(Body {
            inner: BodySpec::from_json(spec).and_then(|s| s.build()).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_ellipsoid(e: &Ellipsoid) -> Self {
        Body {
            inner: body::BodyOracle::from_ellipsoid(&e.inner),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn bounding_radius(&self) -> f64 {
        self.inner.bounding_radius()
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        self.inner.contains(&vector(x))
    }

    #[pyo3(signature = (count=1000, seed=0, tol=body::DEFAULT_TOL))]
    fn sample_boundary(&self, count: usize, seed: u64, tol: f64) -> Vec<Vec<f64>> {
        body::sample_boundary(&self.inner, count, seed, tol)
            .into_iter()
            .map(|p| p.iter().copied().collect())
            .collect()
    }

    #[pyo3(signature = (l, grid=4, tol=body::DEFAULT_TOL))]
    fn fit_mirror<'py>(&self, py: Python<'py>, l: Vec<f64>, grid: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &body::fit_mirror(&self.inner, &line(l)?, grid, tol).map_err(err)?)
    }

    #[pyo3(signature = (l, threshold=body::DEFAULT_THRESHOLD, seed=0))]
    fn has_reflection<'py>(&self, py: Python<'py>, l: Vec<f64>, threshold: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let config = ReflectionConfig {
            threshold,
            seed,
            ..Default::default()
        };
        to_py(py, &body::has_reflection(&self.inner, &line(l)?, &config).map_err(err)?)
    }

    #[pyo3(signature = (samples=500, seed=0, threshold=body::DEFAULT_THRESHOLD))]
    fn direction_scan<'py>(&self, py: Python<'py>, samples: usize, seed: u64, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let mut config = DirectionScanConfig {
            samples,
            seed,
            ..Default::default()
        };
        config.reflection.threshold = threshold;
        to_py(py, &body::direction_scan(&self.inner, &config))
    }

    #[pyo3(signature = (samples=300, seed=0))]
    fn ortho_scan<'py>(&self, py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let config = OrthoScanConfig {
            samples,
            seed,
            ..Default::default()
        };
        to_py(py, &body::orthogonal_reflection_scan(&self.inner, &config))
    }

    #[pyo3(signature = (seed=0, threshold=body::DEFAULT_THRESHOLD))]
    fn classify<'py>(&self, py: Python<'py>, seed: u64, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let config = ClassifyConfig {
            seed,
            threshold,
            ..Default::default()
        };
        to_py(py, &body::classify_body(&self.inner, &config))
    }

    #[pyo3(signature = (samples=200, seed=0, include_empty=false))]
    fn bezdek_scan<'py>(&self, py: Python<'py>, samples: usize, seed: u64, include_empty: bool) -> PyResult<Bound<'py, PyAny>> {
        let config = BezdekConfig {
            samples,
            seed,
            include_empty,
            ..Default::default()
        };
        to_py(py, &bezdek::bezdek_scan(&self.inner, &config).map_err(err)?)
    }

    /// Plane `{x : n·x = offset}` with `n` normalized first.
    fn classify_plane<'py>(&self, py: Python<'py>, normal: Vec<f64>, offset: f64) -> PyResult<Bound<'py, PyAny>> {
        let n = vector(normal);
        let nn = n.norm_squared();
        let plane = body::AffineHyperplane::new(&n, &(&n * (offset / nn))).map_err(err)?;
        to_py(py, &bezdek::classify_plane(&self.inner, &plane, &BezdekConfig::default()).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Body(label={:?}, dim={})", self.inner.label(), self.inner.dim())
    }
}

/// Minimum-volume enclosing ellipsoid of `points`.
#[pyfunction]
#[pyo3(signature = (points, eps=1e-4))]
fn mvee<'py>(py: Python<'py>, points: Vec<Vec<f64>>, eps: f64) -> PyResult<Bound<'py, PyAny>> {
    let pts: Vec<Vector> = points.into_iter().map(vector).collect();
    to_py(py, &body::mvee(&pts, eps).map_err(err)?)
}

/// Runs the command-line front end; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut errs = Vec::new();
    let argv = std::iter::once("reflecta".to_string()).chain(args);
    let code = reflecta::cli::run_with(argv, &mut out, &mut errs);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&errs).into_owned(),
    )
}

#[pymodule]
fn reflecta_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ReflectaError", m.py().get_type::<ReflectaError>())?;
    m.add_class::<Ellipsoid>()?;
    m.add_class::<Body>()?;
    m.add_function(wrap_pyfunction!(mvee, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
