//! Python bindings. Build with `--features extension-module` for a loadable module.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use pwcet_core::engine::wcet_accelerated;
use pwcet_core::explorer::{simulate, wcet_baseline};
use pwcet_core::model::{parse_model, validate, Pta};
use pwcet_core::report::{ComparisonDoc, Report};
use pwcet_core::{bundled, AnalysisError};

create_exception!(pwcet, AnalysisFailure, PyException);
create_exception!(pwcet, UnboundedError, AnalysisFailure);

fn to_py(e: AnalysisError) -> PyErr {
    match e {
        AnalysisError::WcetUnbounded { .. }
        | AnalysisError::NonConvergingCycle { .. }
        | AnalysisError::NoExitEdge { .. } => UnboundedError::new_err(e.to_string()),
        AnalysisError::InvalidDelta(_) | AnalysisError::Model(_) => PyValueError::new_err(e.to_string()),
        _ => AnalysisFailure::new_err(e.to_string()),
    }
}

fn json_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| AnalysisFailure::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A parsed model.
#[pyclass(name = "Model", module = "pwcet", frozen)]
pub struct PyModel {
    pta: Pta,
}

#[pymethods]
impl PyModel {
    /// Parses model source text.
    #[staticmethod]
    fn parse(source: &str) -> PyResult<Self> {
        parse_model(source)
            .map(|pta| PyModel { pta })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Reads a model file, falling back to the bundled model of that name.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let src = match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => bundled::get(path)
                .map(str::to_owned)
                .ok_or_else(|| PyValueError::new_err(format!("cannot read {path}: {e}")))?,
        };
        Self::parse(&src)
    }

    #[staticmethod]
    fn bundled() -> Vec<&'static str> {
        bundled::MODELS.iter().map(|(name, _)| name.trim_end_matches(".pta")).collect()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.pta.name
    }

    #[getter]
    fn clocks(&self) -> Vec<String> {
        self.pta.clocks.clone()
    }

    #[getter]
    fn locations(&self) -> Vec<String> {
        self.pta.locations.iter().map(|l| l.name.clone()).collect()
    }

    /// Violations as `(is_error, message)` pairs.
    fn validate(&self) -> Vec<(bool, String)> {
        validate(&self.pta).iter().map(|v| (v.is_error(), v.to_string())).collect()
    }

    fn __str__(&self) -> String {
        self.pta.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.pta.name)
    }
}

/// The outcome of one analysis run.
#[pyclass(name = "Report", module = "pwcet", frozen)]
pub struct PyReport {
    report: Report,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn wcet(&self) -> f64 {
        self.report.wcet
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.report.mode.as_str()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.report.delta
    }

    #[getter]
    fn states_explored(&self) -> u64 {
        self.report.states_explored
    }

    #[getter]
    fn rg(&self) -> u64 {
        self.report.rg
    }

    #[getter]
    fn terminated(&self) -> bool {
        self.report.terminated
    }

    #[getter]
    fn wall_time(&self) -> f64 {
        self.report.wall_time.as_secs_f64()
    }

    /// The report as plain Python data, including accelerated cycles.
    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.report.to_doc())
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(mode={:?}, wcet={}, states_explored={})",
            self.report.mode.as_str(),
            self.report.wcet,
            self.report.states_explored
        )
    }
}

/// Expected WCET of `model`. `mode` is "accel" or "baseline".
#[pyfunction]
#[pyo3(signature = (model, delta = 1e-6, mode = "accel"))]
fn analyze(py: Python<'_>, model: &PyModel, delta: f64, mode: &str) -> PyResult<PyReport> {
    let pta = &model.pta;
    let result = match mode {
        "accel" | "accelerated" => py.detach(|| wcet_accelerated(pta, delta)),
        "baseline" => py.detach(|| wcet_baseline(pta, delta)),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    result.map(|report| PyReport { report }).map_err(to_py)
}

/// Runs both analyses and returns the comparison as a dict.
#[pyfunction]
#[pyo3(signature = (model, delta = 1e-6))]
fn compare(py: Python<'_>, model: &PyModel, delta: f64) -> PyResult<Py<PyAny>> {
    let pta = &model.pta;
    let (b, a) = py.detach(|| (wcet_baseline(pta, delta), wcet_accelerated(pta, delta)));
    let doc = ComparisonDoc::new(&b.map_err(to_py)?, &a.map_err(to_py)?);
    json_to_py(py, &doc)
}

/// Monte Carlo estimate; returns a dict with trials, mean, std_err and terminated_fraction.
#[pyfunction]
#[pyo3(signature = (model, trials = 100_000, seed = 0))]
fn simulate_runs(py: Python<'_>, model: &PyModel, trials: u64, seed: u64) -> PyResult<Py<PyAny>> {
    if trials == 0 {
        return Err(PyValueError::new_err("trials must be positive"));
    }
    let pta = &model.pta;
    let stats = py.detach(|| simulate(pta, trials, seed));
    json_to_py(py, &stats)
}

#[pymodule]
fn pwcet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_runs, m)?)?;
    m.add("AnalysisFailure", m.py().get_type::<AnalysisFailure>())?;
    m.add("UnboundedError", m.py().get_type::<UnboundedError>())?;
    Ok(())
}
