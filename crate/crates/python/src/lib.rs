//! Python bindings: registry scenarios, runs with diagnostics, and the two
//! projections.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sweep2::diagnostics::{diagnose, DiagnosticsOptions, Summary};
use sweep2::integrator::run;
use sweep2::scenarios::{lookup, registry};
use sweep2::{Error, RunOutput, Vector, VelocityPolyhedron};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::UnknownScenario(_)
        | Error::Dimension { .. }
        | Error::InfeasibleStart { .. }
        | Error::StepSizeTooLarge { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn vector(xs: Vec<f64>, dim: usize, what: &str) -> PyResult<Vector> {
    if xs.len() != dim {
        return Err(PyValueError::new_err(format!("{what} has length {}, expected {dim}", xs.len())));
    }
    Ok(Vector::from_vec(xs))
}

fn rows(vs: &[Vector]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

/// A registry scenario.
#[pyclass(module = "sweep2", frozen)]
struct Scenario {
    inner: sweep2::scenarios::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        lookup(name).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name
    }

    #[getter]
    fn description(&self) -> &'static str {
        self.inner.description
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn q0(&self) -> Vec<f64> {
        self.inner.q0.clone()
    }

    #[getter]
    fn u0(&self) -> Vec<f64> {
        self.inner.u0.clone()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    /// Integrates from `(q0, u0)` with step `h` up to time `T`; missing
    /// arguments take the scenario defaults.
    #[pyo3(signature = (h=None, T=None, q0=None, u0=None))]
    #[allow(non_snake_case)]
    fn run(
        &self,
        py: Python<'_>,
        h: Option<f64>,
        T: Option<f64>,
        q0: Option<Vec<f64>>,
        u0: Option<Vec<f64>>,
    ) -> PyResult<Run> {
        let s = &self.inner;
        let h = h.unwrap_or(s.h);
        let horizon = T.unwrap_or(s.horizon);
        let q0 = vector(q0.unwrap_or_else(|| s.q0.clone()), s.dim, "q0")?;
        let u0 = vector(u0.unwrap_or_else(|| s.u0.clone()), s.dim, "u0")?;
        let (sys, field) = (s.system(), s.force());
        let out = py.detach(|| run(&sys, &field, &q0, &u0, h, horizon)).map_err(to_py)?;
        Ok(Run { scenario: s.clone(), h, horizon, out })
    }

    /// Nearest point of the admissible set at time `t`.
    fn project_point(&self, t: f64, x: Vec<f64>) -> PyResult<Projection> {
        let x = vector(x, self.inner.dim, "x")?;
        let p = sweep2::project_point(&self.inner.system(), t, &x).map_err(to_py)?;
        Ok(Projection::from(p))
    }

    fn __repr__(&self) -> String {
        format!("Scenario('{}')", self.inner.name)
    }
}

/// A finished run.
#[pyclass(module = "sweep2", frozen)]
struct Run {
    scenario: sweep2::scenarios::Scenario,
    h: f64,
    horizon: f64,
    out: RunOutput,
}

#[pymethods]
impl Run {
    #[getter]
    fn h(&self) -> f64 {
        self.h
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.out.trajectory.times.clone()
    }

    #[getter]
    fn positions(&self) -> Vec<Vec<f64>> {
        rows(&self.out.trajectory.positions)
    }

    #[getter]
    fn velocities(&self) -> Vec<Vec<f64>> {
        rows(&self.out.trajectory.velocities)
    }

    /// Contact increments `u^n + h f^n - u^{n+1}`, zero at the first grid point.
    #[getter]
    fn increments(&self) -> Vec<Vec<f64>> {
        rows(&self.out.contact.increments)
    }

    #[getter]
    fn multipliers(&self) -> Vec<Vec<f64>> {
        self.out.contact.multipliers.clone()
    }

    fn position_at(&self, t: f64) -> Vec<f64> {
        self.out.trajectory.position_at(t).iter().copied().collect()
    }

    fn velocity_at(&self, t: f64) -> Vec<f64> {
        self.out.trajectory.velocity_at(t).iter().copied().collect()
    }

    /// Diagnostics summary as a JSON string.
    fn summary_json(&self, py: Python<'_>) -> PyResult<String> {
        let (sys, field) = (self.scenario.system(), self.scenario.force());
        let report = py
            .detach(|| diagnose(&sys, &field, &self.out, self.horizon, &DiagnosticsOptions::default()))
            .map_err(to_py)?;
        Ok(Summary::new(self.scenario.name, self.h, self.horizon, &report).to_json())
    }

    fn __len__(&self) -> usize {
        self.out.trajectory.len()
    }
}

#[pyclass(module = "sweep2", frozen, get_all)]
struct Projection {
    point: Vec<f64>,
    multipliers: Vec<f64>,
    distance: f64,
    converged: bool,
    certified: bool,
}

impl From<sweep2::ProjectionResult> for Projection {
    fn from(p: sweep2::ProjectionResult) -> Self {
        Self {
            point: p.point.iter().copied().collect(),
            multipliers: p.multipliers,
            distance: p.distance,
            converged: p.converged,
            certified: p.certified,
        }
    }
}

#[pymethods]
impl Projection {
    fn __repr__(&self) -> String {
        format!("Projection(point={:?}, distance={:e})", self.point, self.distance)
    }
}

/// Names of the built-in scenarios.
#[pyfunction]
fn scenarios() -> Vec<&'static str> {
    registry().iter().map(|s| s.name).collect()
}

/// Projection of `u` onto `{ v : offsets[i] + <normals[i], v> >= 0 }`.
#[pyfunction]
fn project_velocity(normals: Vec<Vec<f64>>, offsets: Vec<f64>, u: Vec<f64>) -> PyResult<Projection> {
    if normals.len() != offsets.len() {
        return Err(PyValueError::new_err("normals and offsets differ in length"));
    }
    let dim = u.len();
    let normals = normals.into_iter().map(|n| vector(n, dim, "normal")).collect::<PyResult<Vec<_>>>()?;
    let poly = VelocityPolyhedron::from_rows(normals, offsets);
    sweep2::project_velocity(&poly, &Vector::from_vec(u)).map(Projection::from).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "sweep2")]
fn sweep2_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Run>()?;
    m.add_class::<Projection>()?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(project_velocity, m)?)?;
    Ok(())
}
