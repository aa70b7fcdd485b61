//! Python bindings: grids, fields, problem parameters, the minimizer and the
//! rearrangement diagnostics.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use foliated::functional::{eval_objective, lp_norm, multipliers_from_identities};
use foliated::minimize::{minimize as run_minimize, Init, SolveOptions, Subspace};
use foliated::rearrange::{self, HalfPlane};
use foliated::{spectral, Error, FSpec, PolarGrid, ProblemParams, RadialDomain};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn domain(r_inner: f64, r_outer: f64) -> Result<RadialDomain, Error> {
    if r_inner == 0.0 {
        RadialDomain::disk(r_outer)
    } else {
        RadialDomain::annulus(r_inner, r_outer)
    }
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(Arc<PolarGrid>);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n_r, n_a, r_inner = 0.0, r_outer = 1.0))]
    fn new(n_r: usize, n_a: usize, r_inner: f64, r_outer: f64) -> PyResult<Self> {
        let d = domain(r_inner, r_outer).map_err(py_err)?;
        foliated::build_polar_grid(d, n_r, n_a).map(Self).map_err(py_err)
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.0.n_r
    }

    #[getter]
    fn n_a(&self) -> usize {
        self.0.n_a
    }

    #[getter]
    fn r_nodes(&self) -> Vec<f64> {
        self.0.r_nodes.clone()
    }

    #[getter]
    fn a_nodes(&self) -> Vec<f64> {
        self.0.a_nodes.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.w.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(n_r={}, n_a={}, r_inner={}, r_outer={})",
            self.0.n_r, self.0.n_a, self.0.domain.r_inner, self.0.domain.r_outer
        )
    }
}

#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(foliated::Field);

#[pymethods]
impl PyField {
    /// Values in ring-major order: index `i * n_a + j`.
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        foliated::Field::new(&grid.0, values).map(Self).map_err(py_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.0, p)
    }

    fn rotate_steps(&self, steps: i64) -> Self {
        Self(self.0.rotate_steps(steps))
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams(ProblemParams);

#[pymethods]
impl PyParams {
    /// `power_law = (c0, alpha)` selects `F = -c0 |t|^alpha`; `None` is `F = 0`.
    #[new]
    #[pyo3(signature = (theta, p, r_inner = 0.0, r_outer = 1.0, power_law = None))]
    fn new(
        theta: f64,
        p: f64,
        r_inner: f64,
        r_outer: f64,
        power_law: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let f = match power_law {
            Some((c0, alpha)) => FSpec::power_law(c0, alpha),
            None => FSpec::ZERO,
        };
        let d = domain(r_inner, r_outer).map_err(py_err)?;
        ProblemParams::new(theta, p, f, d).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ProblemParams::from_json(text).map(Self).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }
}

#[pyclass(name = "MinimizeResult", frozen)]
struct PyMinimizeResult(foliated::MinimizeResult);

#[pymethods]
impl PyMinimizeResult {
    #[getter]
    fn u(&self) -> PyField {
        PyField(self.0.u.clone())
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.mult.c
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.mult.d
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations
    }

    #[getter]
    fn foliated_defect(&self) -> f64 {
        self.0.symmetry.foliated_defect
    }

    #[getter]
    fn antisym_defect(&self) -> f64 {
        self.0.symmetry.antisym_defect
    }

    #[getter]
    fn even_defect(&self) -> f64 {
        self.0.symmetry.even_defect
    }

    /// Summary without the field values, as a JSON string.
    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }
}

#[pyfunction]
#[pyo3(signature = (params, grid, n_starts = 1, seed = 0, grad_tol = 1e-6, max_iters = 4000, antisymmetric = false, eigenmode_start = false))]
#[allow(clippy::too_many_arguments)]
fn minimize(
    py: Python<'_>,
    params: &PyParams,
    grid: &PyGrid,
    n_starts: usize,
    seed: u64,
    grad_tol: f64,
    max_iters: usize,
    antisymmetric: bool,
    eigenmode_start: bool,
) -> PyResult<PyMinimizeResult> {
    let opts = SolveOptions {
        n_starts,
        seed,
        grad_tol,
        max_iters,
        init: if eigenmode_start { Init::Eigenmode } else { Init::RandomSmooth },
        subspace: if antisymmetric { Subspace::Antisymmetric } else { Subspace::Full },
        ..SolveOptions::default()
    };
    let (p, g) = (params.0, grid.0.clone());
    py.detach(move || run_minimize(&p, &g, &opts))
        .map(PyMinimizeResult)
        .map_err(py_err)
}

#[pyfunction(name = "eval_objective")]
fn py_eval_objective(params: &PyParams, field: &PyField) -> f64 {
    eval_objective(&params.0, &field.0)
}

/// `(c, d)` recovered from the integral identities.
#[pyfunction(name = "multipliers_from_identities")]
fn py_multipliers(params: &PyParams, field: &PyField) -> (f64, f64) {
    let m = multipliers_from_identities(&params.0, &field.0);
    (m.c, m.d)
}

#[pyfunction]
fn two_point_rearrange(field: &PyField, normal_angle: f64) -> PyResult<PyField> {
    rearrange::two_point_rearrange(&field.0, HalfPlane::new(normal_angle))
        .map(PyField)
        .map_err(py_err)
}

#[pyfunction]
fn foliated_symmetrize(field: &PyField) -> PyField {
    PyField(rearrange::foliated_symmetrize(&field.0))
}

#[pyfunction]
fn mollify(field: &PyField, eps: f64) -> PyResult<PyField> {
    rearrange::mollify(&field.0, eps).map(PyField).map_err(py_err)
}

/// `(axis_angle, foliated_defect, antisym_defect, even_defect)`.
#[pyfunction]
fn symmetry_report(field: &PyField) -> PyResult<(f64, f64, f64, f64)> {
    let r = rearrange::symmetry_report(&field.0).map_err(py_err)?;
    Ok((r.axis_angle, r.foliated_defect, r.antisym_defect, r.even_defect))
}

#[pyfunction]
fn neumann_root(n: u32, k: u32) -> PyResult<f64> {
    spectral::neumann_root(n, k).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (radius = 1.0))]
fn first_eigenvalue(radius: f64) -> f64 {
    spectral::first_eigenvalue(radius)
}

#[pymodule]
fn foliated_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyMinimizeResult>()?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(py_eval_objective, m)?)?;
    m.add_function(wrap_pyfunction!(py_multipliers, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_rearrange, m)?)?;
    m.add_function(wrap_pyfunction!(foliated_symmetrize, m)?)?;
    m.add_function(wrap_pyfunction!(mollify, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry_report, m)?)?;
    m.add_function(wrap_pyfunction!(neumann_root, m)?)?;
    m.add_function(wrap_pyfunction!(first_eigenvalue, m)?)?;
    Ok(())
}
