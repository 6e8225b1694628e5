//! Python bindings: `import cspf`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cspf_core::analysis::{
    behavior_response as core_behavior_response, rasterize_field, risk_timeline, ResponseDirection, ResponseOptions,
    RiskKind, TimelineOptions,
};
use cspf_core::baselines::{ttc_2d, TtcOptions};
use cspf_core::calibration::{calibrate as core_calibrate, BinCriteria, BootstrapConfig, CalibrationConfig};
use cspf_core::ingest::{load_directory, synthesize_fixture, write_recording, Dataset as CoreDataset, FixtureSpec};
use cspf_core::ofield::{aggregate_objective, cpa as core_cpa, pair_objective};
use cspf_core::params::ParamsFile;
use cspf_core::sfield::{params_at_velocity, vehicle_proximity_risk};
use cspf_core::trajectory::{GapVector, VehicleState as CoreState};
use cspf_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn risk_kind(name: &str) -> PyResult<RiskKind> {
    match name.to_ascii_lowercase().as_str() {
        "s" => Ok(RiskKind::S),
        "o" => Ok(RiskKind::O),
        _ => Err(PyValueError::new_err(format!("field must be 's' or 'o', got {name:?}"))),
    }
}

/// Subjective and objective field parameters.
#[pyclass(module = "cspf", skip_from_py_object)]
#[derive(Clone)]
struct Params {
    inner: ParamsFile,
}

#[pymethods]
impl Params {
    /// The published constants.
    #[new]
    fn new() -> Self {
        Self { inner: ParamsFile::default() }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ParamsFile::load(&path).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ParamsFile::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn without_lane_terms(&self) -> Self {
        Self { inner: ParamsFile { s_field: self.inner.s_field.without_lane_terms(), ..self.inner.clone() } }
    }

    /// `(gamma_x, beta_x, gamma_y, beta_y)` at ego speed `v`.
    fn shape_at(&self, v: f64) -> PyResult<(f64, f64, f64, f64)> {
        let s = params_at_velocity(&self.inner.s_field, v).map_err(py_err)?;
        Ok((s.gamma_x, s.beta_x, s.gamma_y, s.beta_y))
    }

    #[getter]
    fn gamma_x_poly(&self) -> [f64; 4] {
        self.inner.s_field.gamma_x_poly
    }

    #[getter]
    fn beta_x_poly(&self) -> [f64; 4] {
        self.inner.s_field.beta_x_poly
    }

    #[getter]
    fn gamma_y(&self) -> f64 {
        self.inner.s_field.gamma_y
    }

    #[getter]
    fn beta_y(&self) -> f64 {
        self.inner.s_field.beta_y
    }

    #[getter]
    fn kappa_l(&self) -> f64 {
        self.inner.s_field.kappa_l
    }

    #[getter]
    fn kappa_b(&self) -> f64 {
        self.inner.s_field.kappa_b
    }

    fn __repr__(&self) -> String {
        let s = &self.inner.s_field;
        format!("Params(gamma_y={}, beta_y={}, kappa_l={}, kappa_b={})", s.gamma_y, s.beta_y, s.kappa_l, s.kappa_b)
    }
}

fn params_or_default(params: Option<PyRef<'_, Params>>) -> ParamsFile {
    params.map(|p| p.inner.clone()).unwrap_or_default()
}

/// One vehicle at one instant. Positions are box centers.
#[pyclass(module = "cspf", skip_from_py_object)]
#[derive(Clone)]
struct VehicleState {
    inner: CoreState,
}

#[pymethods]
impl VehicleState {
    #[new]
    #[pyo3(signature = (vehicle_id, x, y, vx, vy=0.0, length=4.5, width=1.8, frame=0, t=0.0, ax=0.0, ay=0.0, lane_id=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        vehicle_id: i64,
        x: f64,
        y: f64,
        vx: f64,
        vy: f64,
        length: f64,
        width: f64,
        frame: i64,
        t: f64,
        ax: f64,
        ay: f64,
        lane_id: i64,
    ) -> Self {
        Self { inner: CoreState { vehicle_id, frame, t, x, y, vx, vy, ax, ay, length, width, lane_id } }
    }

    #[getter]
    fn vehicle_id(&self) -> i64 {
        self.inner.vehicle_id
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    #[getter]
    fn vx(&self) -> f64 {
        self.inner.vx
    }

    #[getter]
    fn vy(&self) -> f64 {
        self.inner.vy
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!("VehicleState(id={}, x={}, y={}, vx={}, vy={})", s.vehicle_id, s.x, s.y, s.vx, s.vy)
    }
}

/// A recording: tracks plus lane geometry.
#[pyclass(module = "cspf")]
struct Dataset {
    inner: CoreDataset,
}

#[pymethods]
impl Dataset {
    /// Every recording in a highD-format directory.
    #[staticmethod]
    fn load_directory(path: PathBuf) -> PyResult<Vec<Dataset>> {
        Ok(load_directory(&path).map_err(py_err)?.into_iter().map(|inner| Dataset { inner }).collect())
    }

    /// A synthetic recording from a fixture spec (JSON text).
    #[staticmethod]
    #[pyo3(signature = (spec_json, seed=0))]
    fn synthesize(spec_json: &str, seed: u64) -> PyResult<Self> {
        let spec = FixtureSpec::from_json(spec_json).map_err(py_err)?;
        Ok(Self { inner: synthesize_fixture(&spec, seed).map_err(py_err)? })
    }

    /// Writes the highD CSV pair into `dir`; returns the tracks path.
    fn write(&self, dir: PathBuf) -> PyResult<PathBuf> {
        Ok(write_recording(&self.inner, &dir).map_err(py_err)?.tracks)
    }

    #[getter]
    fn recording_id(&self) -> i64 {
        self.inner.meta.recording_id
    }

    fn vehicle_ids(&self) -> Vec<i64> {
        self.inner.tracks.keys().copied().collect()
    }

    /// Per-frame risk of one vehicle as a dict of columns.
    #[pyo3(signature = (vehicle_id, params=None))]
    fn timeline<'py>(
        &self,
        py: Python<'py>,
        vehicle_id: i64,
        params: Option<PyRef<'_, Params>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let p = params_or_default(params);
        let tl = risk_timeline(&self.inner, vehicle_id, &p.s_field, &p.o_field, TimelineOptions::default())
            .map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("frame", tl.frames.iter().map(|f| f.frame).collect::<Vec<_>>())?;
        out.set_item("t", tl.frames.iter().map(|f| f.t).collect::<Vec<_>>())?;
        out.set_item("s_risk", tl.frames.iter().map(|f| f.s_risk).collect::<Vec<_>>())?;
        out.set_item("o_risk", tl.frames.iter().map(|f| f.o_risk).collect::<Vec<_>>())?;
        out.set_item("ttci", tl.frames.iter().map(|f| f.ttci).collect::<Vec<_>>())?;
        out.set_item("top_pair_id", tl.frames.iter().map(|f| f.top_pair().map(|p| p.neighbor_id)).collect::<Vec<_>>())?;
        Ok(out)
    }

    /// Ego responses after exceedances; one dict per threshold.
    ///
    /// `direction` is `longitudinal`, `lateral_left` or `lateral_right`.
    #[pyo3(signature = (field, direction, thresholds, params=None, lag=1.0, exclude_lane_changers=true))]
    fn behavior_response<'py>(
        &self,
        py: Python<'py>,
        field: &str,
        direction: &str,
        thresholds: Vec<f64>,
        params: Option<PyRef<'_, Params>>,
        lag: f64,
        exclude_lane_changers: bool,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let direction = match direction {
            "longitudinal" => ResponseDirection::Longitudinal,
            "lateral_left" => ResponseDirection::LateralLeft,
            "lateral_right" => ResponseDirection::LateralRight,
            other => return Err(PyValueError::new_err(format!("unknown direction {other:?}"))),
        };
        let p = params_or_default(params);
        let options = ResponseOptions { thresholds, lag, exclude_lane_changers, ..Default::default() };
        let dists = core_behavior_response(&self.inner, risk_kind(field)?, direction, &p.s_field, &p.o_field, &options)
            .map_err(py_err)?;
        dists
            .into_iter()
            .map(|d| {
                let out = PyDict::new(py);
                out.set_item("threshold", d.threshold)?;
                out.set_item("mean", d.mean())?;
                out.set_item("excluded_lane_changers", d.excluded_lane_changers)?;
                out.set_item("vehicle_ids", d.samples.iter().map(|s| s.vehicle_id).collect::<Vec<_>>())?;
                out.set_item("values", d.values)?;
                Ok(out)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.tracks.len()
    }
}

/// Subjective risk of a gap `(dx, dy)` for an ego at speed `velocity`.
#[pyfunction]
#[pyo3(signature = (dx, dy, velocity, params=None))]
fn vehicle_risk(dx: f64, dy: f64, velocity: f64, params: Option<PyRef<'_, Params>>) -> PyResult<f64> {
    let shape = params_at_velocity(&params_or_default(params).s_field, velocity).map_err(py_err)?;
    vehicle_proximity_risk(GapVector { dx, dy }, &shape).map_err(py_err)
}

/// Closest point of approach `(t_m, d_m)`; infinite when receding.
#[pyfunction]
fn cpa(dx: f64, dy: f64, dvx: f64, dvy: f64) -> PyResult<(f64, f64)> {
    let r = core_cpa((dx, dy), (dvx, dvy)).map_err(py_err)?;
    Ok((r.t_m, r.d_m))
}

/// Objective risk `other` imposes on `ego`.
#[pyfunction]
#[pyo3(signature = (ego, other, params=None))]
fn objective_risk(ego: PyRef<'_, VehicleState>, other: PyRef<'_, VehicleState>, params: Option<PyRef<'_, Params>>) -> PyResult<f64> {
    Ok(pair_objective(&ego.inner, &other.inner, &params_or_default(params).o_field).map_err(py_err)?.risk)
}

/// Time to collision in seconds, `None` when the boxes never meet.
#[pyfunction]
#[pyo3(signature = (ego, other, dt=0.01, horizon=30.0))]
fn ttc(ego: PyRef<'_, VehicleState>, other: PyRef<'_, VehicleState>, dt: f64, horizon: f64) -> PyResult<Option<f64>> {
    Ok(ttc_2d(&ego.inner, &other.inner, TtcOptions { dt, horizon }).map_err(py_err)?.ttc)
}

/// `1 - prod(1 - r)`.
#[pyfunction]
fn aggregate(risks: Vec<f64>) -> PyResult<f64> {
    aggregate_objective(&risks).map_err(py_err)
}

/// Samples one field around an ego at the origin driving at `velocity`.
/// Returns `(xs, ys, rows)` with one row per y.
#[pyfunction]
#[pyo3(signature = (field, velocity, other=None, extent=(100.0, 20.0), res=0.25, params=None))]
fn rasterize(
    field: &str,
    velocity: f64,
    other: Option<PyRef<'_, VehicleState>>,
    extent: (f64, f64),
    res: f64,
    params: Option<PyRef<'_, Params>>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let p = params_or_default(params);
    let ego = CoreState { vehicle_id: 0, frame: 0, t: 0.0, x: 0.0, y: 0.0, vx: velocity, vy: 0.0, ax: 0.0, ay: 0.0, length: 4.5, width: 1.8, lane_id: 0 };
    let other = other.map(|o| o.inner);
    let grid = rasterize_field(&ego, risk_kind(field)?, &p.s_field, &p.o_field, other.as_ref(), extent, res)
        .map_err(py_err)?;
    let rows = grid.values.chunks(grid.xs.len()).map(|r| r.to_vec()).collect();
    Ok((grid.xs, grid.ys, rows))
}

/// Calibrates the subjective field on the given recordings.
#[pyfunction]
#[pyo3(signature = (datasets, seed=0, min_samples=500, min_vehicles=10, iterations=20, stride=1))]
fn calibrate(
    datasets: Vec<PyRef<'_, Dataset>>,
    seed: u64,
    min_samples: usize,
    min_vehicles: usize,
    iterations: usize,
    stride: i64,
) -> PyResult<Params> {
    let data: Vec<CoreDataset> = datasets.iter().map(|d| d.inner.clone()).collect();
    let config = CalibrationConfig {
        stride,
        criteria: BinCriteria { min_samples, min_vehicles },
        bootstrap: BootstrapConfig { n_iter: iterations, seed, ..Default::default() },
        ..Default::default()
    };
    let report = core_calibrate(&data, &config).map_err(py_err)?;
    Ok(Params { inner: ParamsFile { s_field: report.params, ..Default::default() } })
}

#[pymodule]
fn cspf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_class::<VehicleState>()?;
    m.add_class::<Dataset>()?;
    m.add_function(wrap_pyfunction!(vehicle_risk, m)?)?;
    m.add_function(wrap_pyfunction!(cpa, m)?)?;
    m.add_function(wrap_pyfunction!(objective_risk, m)?)?;
    m.add_function(wrap_pyfunction!(ttc, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(rasterize, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    Ok(())
}
