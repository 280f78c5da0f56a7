//! Python bindings: scenarios, the optimizer, the grid oracle and the
//! report-producing commands.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cdcp_core::cli::{compare_report, simulate_report};
use cdcp_core::netmodel::{evaluate, evaluate_constraints, select_serving_cell};
use cdcp_core::oracle::{grid_search as core_grid_search, GridSpec};
use cdcp_core::scenario::{load_scenario, Report, ReportFormat, Scenario as CoreScenario};
use cdcp_core::{geometry, netmodel, solver, CdcpError};

fn py_err(e: CdcpError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, eq, from_py_object, module = "cdcp")]
#[derive(Clone, Copy, PartialEq)]
pub struct Location3D(geometry::Location3D);

#[pymethods]
impl Location3D {
    #[new]
    fn new(x: f64, y: f64, z: f64) -> Self {
        Self(geometry::Location3D::new(x, y, z))
    }
    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }
    #[getter]
    fn y(&self) -> f64 {
        self.0.y
    }
    #[getter]
    fn z(&self) -> f64 {
        self.0.z
    }
    fn distance(&self, other: &Location3D) -> f64 {
        self.0.distance(&other.0)
    }
    fn __repr__(&self) -> String {
        format!("Location3D({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

/// Transmit direction: azimuth in [0, 2π), polar angle from zenith in [0, π].
#[pyclass(frozen, eq, from_py_object, module = "cdcp")]
#[derive(Clone, Copy, PartialEq)]
pub struct Direction(geometry::Direction);

#[pymethods]
impl Direction {
    #[new]
    fn new(azimuth: f64, polar: f64) -> Self {
        Self(geometry::Direction::new(azimuth, polar))
    }
    #[getter]
    fn azimuth(&self) -> f64 {
        self.0.azimuth
    }
    #[getter]
    fn polar(&self) -> f64 {
        self.0.polar
    }
    fn __repr__(&self) -> String {
        format!("Direction({}, {})", self.0.azimuth, self.0.polar)
    }
}

#[pyclass(frozen, from_py_object, module = "cdcp")]
#[derive(Clone)]
pub struct AppRequest(netmodel::AppRequest);

#[pymethods]
impl AppRequest {
    #[new]
    #[pyo3(signature = (poi, dis_max, rate_app, min_altitude, sinr_min))]
    fn new(poi: &Location3D, dis_max: f64, rate_app: f64, min_altitude: f64, sinr_min: f64) -> PyResult<Self> {
        let req = netmodel::AppRequest {
            poi: poi.0,
            dis_max,
            rate_app,
            min_altitude,
            sinr_min,
        };
        req.validate().map_err(py_err)?;
        Ok(Self(req))
    }
    #[getter]
    fn poi(&self) -> Location3D {
        Location3D(self.0.poi)
    }
    #[getter]
    fn dis_max(&self) -> f64 {
        self.0.dis_max
    }
    #[getter]
    fn rate_app(&self) -> f64 {
        self.0.rate_app
    }
    #[getter]
    fn min_altitude(&self) -> f64 {
        self.0.min_altitude
    }
    #[getter]
    fn sinr_min(&self) -> f64 {
        self.0.sinr_min
    }
    /// Copy of the request centered on another POI.
    fn at(&self, poi: &Location3D) -> PyResult<Self> {
        let req = netmodel::AppRequest { poi: poi.0, ..self.0 };
        req.validate().map_err(py_err)?;
        Ok(Self(req))
    }
}

/// A validated scenario, in meters.
#[pyclass(module = "cdcp")]
pub struct Scenario(CoreScenario);

#[pymethods]
impl Scenario {
    /// Loads a scenario file, or a bundled one by name (`rural`, `suburban`, `urban`).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_scenario(path).map(Self).map_err(py_err)
    }
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreScenario::parse(text).map(Self).map_err(py_err)
    }
    /// Canonical JSON in meters.
    fn to_json(&self) -> String {
        self.0.file.to_json()
    }
    fn with_seed(&self, seed: u64) -> Self {
        Self(self.0.clone().with_seed(seed))
    }
    #[getter]
    fn name(&self) -> String {
        self.0.file.name.clone()
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }
    #[getter]
    fn request(&self) -> AppRequest {
        AppRequest(self.0.request)
    }
    #[getter]
    fn cell_ids(&self) -> Vec<String> {
        self.0.snapshot.cells().iter().map(|(bs, _)| bs.id.clone()).collect()
    }
    #[getter]
    fn loads(&self) -> Vec<f64> {
        self.0.snapshot.cells().iter().map(|(_, st)| st.load).collect()
    }
    /// Copy with new per-cell loads, in `cell_ids` order.
    fn with_loads(&self, loads: Vec<f64>) -> PyResult<Self> {
        let snapshot = self.0.snapshot.with_loads(&loads).map_err(py_err)?;
        Ok(Self(CoreScenario { snapshot, ..self.0.clone() }))
    }
    fn config_hash(&self) -> String {
        self.0.config_hash("")
    }
    fn __repr__(&self) -> String {
        format!("Scenario({:?}, {} cells, seed {})", self.0.file.name, self.0.snapshot.len(), self.0.seed)
    }
}

#[pyclass(frozen, module = "cdcp")]
pub struct Solution {
    inner: solver::Solution,
    serving_id: String,
}

impl Solution {
    fn wrap(s: solver::Solution, scenario: &CoreScenario) -> Self {
        let serving_id = scenario.snapshot.station(s.serving).id.clone();
        Self { inner: s, serving_id }
    }
}

#[pymethods]
impl Solution {
    #[getter]
    fn location(&self) -> Location3D {
        Location3D(self.inner.location)
    }
    #[getter]
    fn direction(&self) -> Direction {
        Direction(self.inner.direction)
    }
    #[getter]
    fn serving(&self) -> String {
        self.serving_id.clone()
    }
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }
    #[getter]
    fn uav_capacity(&self) -> f64 {
        self.inner.uav_capacity
    }
    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }
    #[getter]
    fn relaxation_applied(&self) -> f64 {
        self.inner.relaxation_applied
    }
    #[getter]
    fn seeds_evaluated(&self) -> usize {
        self.inner.seeds_evaluated
    }
    #[getter]
    fn solve_time(&self) -> f64 {
        self.inner.solve_time
    }
    /// Constraint slacks: dB for the SINR terms, meters for the geometry.
    #[getter]
    fn slacks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.slacks;
        let d = PyDict::new(py);
        d.set_item("neighbor_sinr_db", s.neighbor_sinr_db)?;
        d.set_item("uav_qos_db", s.uav_qos_db)?;
        d.set_item("distance_m", s.distance_m)?;
        d.set_item("altitude_m", s.altitude_m)?;
        Ok(d)
    }
    fn __repr__(&self) -> String {
        format!(
            "Solution(objective={:.6e}, feasible={}, relaxation={}, serving={:?})",
            self.inner.objective, self.inner.feasible, self.inner.relaxation_applied, self.serving_id
        )
    }
}

/// Optimizes location and direction for the scenario's request, or for
/// `request` when given.
#[pyfunction]
#[pyo3(signature = (scenario, request=None))]
fn solve(py: Python<'_>, scenario: &Scenario, request: Option<&AppRequest>) -> PyResult<Solution> {
    let req = request.map_or(scenario.0.request, |r| r.0);
    let sc = &scenario.0;
    let s = py
        .detach(|| cdcp_core::solve_cdcp(&sc.snapshot, &req, &sc.solver))
        .map_err(py_err)?;
    Ok(Solution::wrap(s, sc))
}

/// Exhaustive grid search with `resolution` points per location axis.
#[pyfunction]
#[pyo3(signature = (scenario, resolution=21, request=None))]
fn grid_search(py: Python<'_>, scenario: &Scenario, resolution: usize, request: Option<&AppRequest>) -> PyResult<Solution> {
    let req = request.map_or(scenario.0.request, |r| r.0);
    let sc = &scenario.0;
    let spec = GridSpec {
        relaxation_step: sc.solver.relaxation_step,
        max_relaxation: sc.solver.max_relaxation,
        ..GridSpec::with_resolution(resolution)
    };
    let s = py.detach(|| core_grid_search(&sc.snapshot, &req, &spec)).map_err(py_err)?;
    Ok(Solution::wrap(s, sc))
}

/// Objective and constraint figures at a given decision point. The serving
/// cell is chosen from the location.
#[pyfunction]
#[pyo3(signature = (scenario, location, direction, request=None))]
fn evaluate_point<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    location: &Location3D,
    direction: &Direction,
    request: Option<&AppRequest>,
) -> PyResult<Bound<'py, PyDict>> {
    let req = request.map_or(scenario.0.request, |r| r.0);
    let snap = &scenario.0.snapshot;
    let serving = select_serving_cell(snap, location.0);
    let e = evaluate(snap, serving, location.0, direction.0);
    let c = evaluate_constraints(snap, serving, &req, location.0, direction.0);
    let d = PyDict::new(py);
    d.set_item("serving", snap.station(serving).id.clone())?;
    d.set_item("objective", e.objective)?;
    d.set_item("uav_capacity", e.uav_capacity)?;
    d.set_item("uav_sinr_db", e.uav_sinr_db)?;
    d.set_item("min_neighbor_sinr_db", e.min_neighbor_sinr_db)?;
    d.set_item("feasible", c.feasible)?;
    Ok(d)
}

/// The `compare` report (Opt against the four baselines over `pois` seeded
/// POIs) as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, pois=20))]
fn compare<'py>(py: Python<'py>, scenario: &Scenario, pois: usize) -> PyResult<Bound<'py, PyAny>> {
    let sc = &scenario.0;
    let text = py
        .detach(|| compare_report(sc, pois).map(|r| Report::Compare(r).render(ReportFormat::Json)))
        .map_err(py_err)?;
    to_py_json(py, &text)
}

/// The `simulate` timeline report as a dict.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, scenario: &Scenario) -> PyResult<Bound<'py, PyAny>> {
    let sc = &scenario.0;
    let text = py
        .detach(|| simulate_report(sc).map(|r| Report::Simulate(r).render(ReportFormat::Json)))
        .map_err(py_err)?;
    to_py_json(py, &text)
}

#[pymodule]
fn cdcp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Location3D>()?;
    m.add_class::<Direction>()?;
    m.add_class::<AppRequest>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_point, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
