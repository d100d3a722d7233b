//! Python bindings: masks, the assignment solver, configuration, synthetic
//! scenarios, the tracking pipeline and evaluation.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use masktrack_core::io::{read_mots, rle_from_string, rle_to_string};
use masktrack_core::metrics::{evaluate as evaluate_records, EvalReport};
use masktrack_core::pipeline::{Association, IdealInputs};
use masktrack_core::sta::{hungarian_min as solve, CostMatrix};
use masktrack_core::synth::{generate, preset};
use masktrack_core::{BinaryMask, Error, PipelineConfig, TrackedMask};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Binary mask stored as column-major run lengths.
#[pyclass(name = "Mask", module = "masktrack", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMask(BinaryMask);

#[pymethods]
impl PyMask {
    #[new]
    fn new(width: u32, height: u32, runs: Vec<u32>) -> PyResult<Self> {
        BinaryMask::from_runs(width, height, &runs).map(PyMask).map_err(py_err)
    }

    #[staticmethod]
    fn rect(width: u32, height: u32, x: i64, y: i64, w: u32, h: u32) -> Self {
        PyMask(BinaryMask::rect(width, height, x, y, w, h))
    }

    /// Column-major booleans, `pixels[x * height + y]`.
    #[staticmethod]
    fn from_dense(width: u32, height: u32, pixels: Vec<bool>) -> PyResult<Self> {
        BinaryMask::from_dense(width, height, &pixels).map(PyMask).map_err(py_err)
    }

    #[staticmethod]
    fn from_rle_string(s: &str, width: u32, height: u32) -> PyResult<Self> {
        rle_from_string(s, width, height).map(PyMask).map_err(py_err)
    }

    fn to_rle_string(&self) -> String {
        rle_to_string(&self.0)
    }

    fn to_dense(&self) -> Vec<bool> {
        self.0.to_dense()
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    #[getter]
    fn runs(&self) -> Vec<u32> {
        self.0.runs().to_vec()
    }

    fn area(&self) -> u64 {
        self.0.area()
    }

    fn iou(&self, other: &PyMask) -> PyResult<f64> {
        self.0.iou(&other.0).map_err(py_err)
    }

    fn centroid(&self) -> PyResult<(f64, f64)> {
        self.0.centroid().map_err(py_err)
    }

    fn __eq__(&self, other: &PyMask) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Mask({}x{}, area={})", self.0.width(), self.0.height(), self.0.area())
    }
}

/// Pipeline hyperparameters.
#[pyclass(name = "Config", module = "masktrack", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyConfig(PipelineConfig);

#[pymethods]
impl PyConfig {
    /// Keyword arguments override the defaults, e.g. `Config(theta_l=0.5)`.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<HashMap<String, Bound<'_, PyAny>>>) -> PyResult<Self> {
        let mut cfg = PyConfig::default();
        for (k, v) in overrides.unwrap_or_default() {
            cfg.set(&k, &v.str()?.to_string())?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.0.set(key, value).map_err(py_err)
    }

    fn to_dict(&self) -> HashMap<&'static str, String> {
        let c = &self.0;
        HashMap::from([
            ("theta_d", c.theta_d.to_string()),
            ("theta_a", c.theta_a.to_string()),
            ("theta_s", c.theta_s.to_string()),
            ("tau_t", c.tau_t.to_string()),
            ("tau_s", c.tau_s.to_string()),
            ("tau_o", c.tau_o.to_string()),
            ("n_ref", c.n_ref.to_string()),
            ("theta_l", c.theta_l.to_string()),
            ("theta_f", c.theta_f.to_string()),
            ("ref_variant", c.ref_variant.to_string()),
            ("backend", c.backend.to_string()),
            ("histogram_bins", c.histogram_bins.to_string()),
        ])
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

fn report_dict(r: &EvalReport) -> HashMap<String, f64> {
    let mut d: HashMap<String, f64> = r.summary().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    d.insert("TP".into(), r.tp as f64);
    d
}

/// A generated sequence with ground truth and ideal appearance inputs.
#[pyclass(name = "Scenario", module = "masktrack")]
struct PyScenario {
    scenario: masktrack_core::synth::Scenario,
}

fn parse_mode(mode: &str) -> PyResult<Association> {
    Ok(match mode {
        "full" => Association::Full,
        "short_term" => Association::ShortTermOnly,
        "oracle_lta" => Association::OracleLta,
        "oracle_slta" => Association::OracleSlta,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown mode '{mode}' (full, short_term, oracle_lta, oracle_slta)"
            )))
        }
    })
}

type Record = (u32, u32, u32, String);

fn to_records(records: &[TrackedMask]) -> Vec<Record> {
    records
        .iter()
        .map(|r| (r.frame, r.track_id, r.class_id, rle_to_string(&r.mask)))
        .collect()
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (preset_name = "lanes", seed = 0))]
    fn new(preset_name: &str, seed: u64) -> PyResult<Self> {
        let spec = preset(preset_name, seed).map_err(py_err)?;
        Ok(PyScenario { scenario: generate(&spec).map_err(py_err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.scenario.meta.sequence_id.clone()
    }

    #[getter]
    fn frame_count(&self) -> u32 {
        self.scenario.meta.frame_count
    }

    #[getter]
    fn num_detections(&self) -> usize {
        self.scenario.detections.len()
    }

    /// Ground truth as `(frame, track_id, class_id, rle)` tuples.
    fn ground_truth(&self) -> Vec<Record> {
        to_records(&self.scenario.gt)
    }

    /// Runs the pipeline and returns `(records, metrics)`.
    #[pyo3(signature = (config = None, mode = "full", heatmap_blur = 0))]
    fn track(
        &self,
        py: Python<'_>,
        config: Option<&PyConfig>,
        mode: &str,
        heatmap_blur: u32,
    ) -> PyResult<(Vec<Record>, HashMap<String, f64>)> {
        let cfg = config.map(|c| c.0.clone()).unwrap_or_default();
        let mode = parse_mode(mode)?;
        let scenario = &self.scenario;
        py.detach(|| {
            let ideal = IdealInputs::new(scenario, heatmap_blur);
            let result = ideal.run(&cfg, mode)?;
            let report = ideal.evaluate(&result)?;
            Ok::<_, Error>((to_records(&result.records()), report_dict(&report)))
        })
        .map_err(py_err)
    }
}

/// Minimum-cost assignment of a rectangular cost matrix, as `(row, col)` pairs.
#[pyfunction]
fn hungarian_min(cost: Vec<Vec<f64>>) -> PyResult<Vec<(usize, usize)>> {
    let cols = cost.first().map_or(0, |r| r.len());
    if cost.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("cost rows must have equal length"));
    }
    if cost.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PyValueError::new_err("costs must be finite"));
    }
    let m = CostMatrix::from_fn(cost.len(), cols, |i, j| cost[i][j]);
    let mut pairs = solve(&m).pairs;
    pairs.sort_unstable();
    Ok(pairs)
}

#[pyfunction]
fn mask_iou(a: &PyMask, b: &PyMask) -> PyResult<f64> {
    a.iou(b)
}

/// Scores a result file against a ground-truth file.
#[pyfunction]
#[pyo3(signature = (pred, gt, class_id = None))]
fn evaluate(pred: PathBuf, gt: PathBuf, class_id: Option<u32>) -> PyResult<HashMap<String, f64>> {
    let p = read_mots(&pred).map_err(py_err)?;
    let g = read_mots(&gt).map_err(py_err)?;
    Ok(report_dict(&evaluate_records(&p, &g, class_id).map_err(py_err)?))
}

#[pymodule]
fn masktrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMask>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(hungarian_min, m)?)?;
    m.add_function(wrap_pyfunction!(mask_iou, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
