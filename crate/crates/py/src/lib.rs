//! Python bindings: `import pyharsweep`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use harsweep::dataset;
use harsweep::ensemble::{self as ens, UpdateStrategy};
use harsweep::evaluation::{self as eval, PipelineOptions, SweepOptions};
use harsweep::features;
use harsweep::learners;
use harsweep::windowing;

fn to_py(e: harsweep::Error) -> PyErr {
    match e {
        harsweep::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<ens::OnlineMode> {
    mode.parse().map_err(to_py)
}

#[pyclass(name = "WindowConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWindowConfig {
    inner: windowing::WindowConfig,
}

#[pymethods]
impl PyWindowConfig {
    #[new]
    fn new(window_size: usize, overlap: f64) -> PyResult<Self> {
        Ok(Self {
            inner: windowing::WindowConfig::new(window_size, overlap).map_err(to_py)?,
        })
    }

    #[getter]
    fn window_size(&self) -> usize {
        self.inner.window_size()
    }

    #[getter]
    fn overlap(&self) -> f64 {
        self.inner.overlap()
    }

    #[getter]
    fn step(&self) -> usize {
        self.inner.step()
    }

    fn window_count(&self, n: usize) -> usize {
        self.inner.window_count(n)
    }

    fn __repr__(&self) -> String {
        format!("WindowConfig({}, {})", self.inner.window_size(), self.inner.overlap())
    }
}

#[pyclass(name = "SensorStream", frozen, from_py_object)]
#[derive(Clone)]
struct PySensorStream {
    inner: dataset::SensorStream,
}

#[pymethods]
impl PySensorStream {
    /// Parses a PAMAP2 subject file.
    #[staticmethod]
    fn read(path: PathBuf, user_id: u8) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::read_subject_file(&path, user_id).map_err(to_py)?,
        })
    }

    #[getter]
    fn user_id(&self) -> u8 {
        self.inner.user_id
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn activities(&self) -> Vec<u8> {
        self.inner.activities()
    }

    fn labels(&self) -> Vec<u8> {
        self.inner.samples.iter().map(|s| s.activity_id).collect()
    }

    fn timestamps(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.timestamp).collect()
    }

    /// Values of one of the 27 motion signals; missing readings are NaN.
    fn signal(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= dataset::SIGNAL_COUNT {
            return Err(PyValueError::new_err(format!("signal index {index} out of range")));
        }
        Ok(self
            .inner
            .samples
            .iter()
            .map(|s| s.signal(index).map_or(f64::NAN, f64::from))
            .collect())
    }

    /// Drops transient and optional-activity samples.
    fn protocol_only(&self) -> Self {
        Self {
            inner: dataset::filter_protocol_activities(self.inner.clone()),
        }
    }

    fn sample_counts(&self) -> Vec<(u8, usize)> {
        dataset::sample_counts(&self.inner).into_iter().collect()
    }

    fn __repr__(&self) -> String {
        format!("SensorStream(user_id={}, samples={})", self.inner.user_id, self.inner.len())
    }
}

#[pyclass(name = "SyntheticSpec", skip_from_py_object)]
#[derive(Clone)]
struct PySyntheticSpec {
    inner: dataset::SyntheticSpec,
}

#[pymethods]
impl PySyntheticSpec {
    #[new]
    #[pyo3(signature = (seed=0, users=3, class_count=4, samples_per_class=2000))]
    fn new(seed: u64, users: u8, class_count: usize, samples_per_class: usize) -> Self {
        Self {
            inner: dataset::SyntheticSpec::new(seed, users, class_count, samples_per_class),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::SyntheticSpec::from_toml(text).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
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
    fn noise_sigma(&self) -> f64 {
        self.inner.noise_sigma
    }

    #[setter]
    fn set_noise_sigma(&mut self, v: f64) {
        self.inner.noise_sigma = v;
    }

    #[getter]
    fn segment_length(&self) -> usize {
        self.inner.segment_length
    }

    #[setter]
    fn set_segment_length(&mut self, v: usize) {
        self.inner.segment_length = v;
    }

    /// Adds a constant offset to every signal of one user.
    fn shift_user(&mut self, user: u8, shift: f64) {
        self.inner.user_shifts.retain(|s| s.user != user);
        self.inner.user_shifts.push(dataset::UserShift { user, shift });
    }

    fn generate(&self) -> PyResult<Vec<PySensorStream>> {
        Ok(dataset::generate_synthetic(&self.inner)
            .map_err(to_py)?
            .into_iter()
            .map(|inner| PySensorStream { inner })
            .collect())
    }
}

#[pyclass(name = "FeatureVector", frozen, from_py_object)]
#[derive(Clone)]
struct PyFeatureVector {
    inner: features::FeatureVector,
}

#[pymethods]
impl PyFeatureVector {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn label(&self) -> u8 {
        self.inner.label
    }

    #[getter]
    fn user_id(&self) -> u8 {
        self.inner.user_id
    }

    #[getter]
    fn window_index(&self) -> usize {
        self.inner.window_index
    }

    #[getter]
    fn degraded(&self) -> bool {
        self.inner.is_degraded()
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }
}

fn unwrap_features(fvs: &[PyFeatureVector]) -> Vec<features::FeatureVector> {
    fvs.iter().map(|f| f.inner.clone()).collect()
}

#[pyfunction]
fn feature_names() -> Vec<String> {
    features::feature_names()
}

/// Segments, labels and featurizes a stream.
#[pyfunction]
#[pyo3(signature = (stream, config, purity=windowing::DEFAULT_PURITY))]
fn extract_features(
    py: Python<'_>,
    stream: &PySensorStream,
    config: &PyWindowConfig,
    purity: f64,
) -> Vec<PyFeatureVector> {
    py.detach(|| features::extract_stream(&stream.inner, &config.inner, purity))
        .into_iter()
        .map(|inner| PyFeatureVector { inner })
        .collect()
}

#[pyfunction]
fn hoeffding_bound(range: f64, delta: f64, n: u64) -> PyResult<f64> {
    learners::hoeffding_bound(range, delta, n).map_err(to_py)
}

#[pyclass(name = "Prediction", frozen)]
struct PyPrediction {
    inner: ens::Prediction,
}

#[pymethods]
impl PyPrediction {
    #[getter]
    fn label(&self) -> u8 {
        self.inner.label
    }

    #[getter]
    fn confidence(&self) -> f64 {
        self.inner.confidence
    }

    #[getter]
    fn voters(&self) -> usize {
        self.inner.voters
    }

    /// Posterior of each member (kNN, naive Bayes, Hoeffding tree).
    #[getter]
    fn members(&self) -> Vec<Vec<f64>> {
        self.inner.members.iter().map(|d| d.probs().to_vec()).collect()
    }
}

#[pyclass(name = "EnsembleModel", skip_from_py_object)]
#[derive(Clone)]
struct PyEnsembleModel {
    inner: ens::EnsembleModel,
}

fn ensemble_config(k: usize, capacity: usize, theta: f64, strategy: &str) -> PyResult<ens::EnsembleConfig> {
    let mut cfg = ens::EnsembleConfig::default();
    cfg.knn.k = k;
    cfg.knn.capacity = capacity;
    cfg.confidence_threshold = theta;
    cfg.strategy = match strategy {
        "all" => UpdateStrategy::AllMembers,
        "tri" => UpdateStrategy::TriTraining,
        other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    };
    Ok(cfg)
}

#[pymethods]
impl PyEnsembleModel {
    #[staticmethod]
    #[pyo3(signature = (instances, k=5, capacity=5000, theta=ens::DEFAULT_CONFIDENCE_THRESHOLD, strategy="all"))]
    fn train(
        py: Python<'_>,
        instances: Vec<PyFeatureVector>,
        k: usize,
        capacity: usize,
        theta: f64,
        strategy: &str,
    ) -> PyResult<Self> {
        let cfg = ensemble_config(k, capacity, theta, strategy)?;
        let fvs = unwrap_features(&instances);
        let inner = py
            .detach(|| ens::EnsembleModel::train_offline(cfg, &fvs))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    fn classify(&self, values: Vec<f64>) -> PyResult<PyPrediction> {
        Ok(PyPrediction {
            inner: self.inner.classify(&values).map_err(to_py)?,
        })
    }

    /// Learns from a confident prediction; returns whether the gate fired.
    fn self_update(&mut self, values: Vec<f64>) -> PyResult<bool> {
        let prediction = self.inner.classify(&values).map_err(to_py)?;
        Ok(self.inner.self_update(&values, &prediction))
    }

    fn state_hash(&self) -> u64 {
        self.inner.state_hash()
    }

    #[getter]
    fn self_updates(&self) -> u64 {
        self.inner.counters().self_updates
    }

    fn classes(&self) -> Vec<u8> {
        self.inner.classes().labels().to_vec()
    }

    /// Streams instances through a copy of the model. Returns the audit log as
    /// `(window_index, true_label, predicted_label, confidence, applied)` rows
    /// and the model after the run.
    fn run_online(
        &self,
        py: Python<'_>,
        instances: Vec<PyFeatureVector>,
        mode: &str,
    ) -> PyResult<(Vec<(usize, u8, u8, f64, bool)>, PyEnsembleModel)> {
        let mode = parse_mode(mode)?;
        let fvs = unwrap_features(&instances);
        let model = self.inner.clone();
        let run = py.detach(|| model.run_online(&fvs, mode)).map_err(to_py)?;
        let rows = run
            .records
            .iter()
            .map(|r| (r.window_index, r.true_label, r.predicted_label, r.confidence, r.applied))
            .collect();
        Ok((rows, PyEnsembleModel { inner: run.model }))
    }
}

#[pyclass(name = "FoldResult", frozen)]
struct PyFoldResult {
    inner: eval::FoldResult,
}

#[pymethods]
impl PyFoldResult {
    #[getter]
    fn user_id(&self) -> u8 {
        self.inner.user_id
    }

    #[getter]
    fn window_size(&self) -> usize {
        self.inner.window_size
    }

    #[getter]
    fn overlap(&self) -> f64 {
        self.inner.overlap
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn windows(&self) -> usize {
        self.inner.windows
    }

    #[getter]
    fn correct(&self) -> usize {
        self.inner.correct
    }

    /// `None` when the test stream produced no windows.
    #[getter]
    fn accuracy(&self) -> Option<f64> {
        self.inner.accuracy()
    }

    #[getter]
    fn self_updates(&self) -> u64 {
        self.inner.self_updates
    }

    /// `activity -> (windows, correct)`.
    fn per_activity(&self) -> Vec<(u8, usize, usize)> {
        self.inner
            .per_activity
            .iter()
            .map(|(&a, s)| (a, s.windows, s.correct))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "FoldResult(user={}, W={}, o={}, mode={}, accuracy={:?})",
            self.inner.user_id,
            self.inner.window_size,
            self.inner.overlap,
            self.inner.mode,
            self.inner.accuracy()
        )
    }
}

fn unwrap_streams(streams: &[PySensorStream]) -> Vec<dataset::SensorStream> {
    streams.iter().map(|s| s.inner.clone()).collect()
}

/// Leave-one-user-out evaluation of one test user at one configuration.
#[pyfunction]
#[pyo3(signature = (streams, test_user, config, mode="semi", seed=0, purity=windowing::DEFAULT_PURITY))]
fn evaluate_user(
    py: Python<'_>,
    streams: Vec<PySensorStream>,
    test_user: u8,
    config: &PyWindowConfig,
    mode: &str,
    seed: u64,
    purity: f64,
) -> PyResult<PyFoldResult> {
    let mode = parse_mode(mode)?;
    let streams = unwrap_streams(&streams);
    let fold = eval::louo_split(&streams)
        .map_err(to_py)?
        .into_iter()
        .find(|f| f.test_user == test_user)
        .ok_or_else(|| PyValueError::new_err(format!("no stream for user {test_user}")))?;
    let options = PipelineOptions {
        purity,
        ..Default::default()
    };
    let cfg = config.inner;
    let outcome = py
        .detach(|| eval::evaluate_fold(&fold, &streams, &cfg, mode, &options, seed))
        .map_err(to_py)?;
    Ok(PyFoldResult { inner: outcome.result })
}

/// Full grid sweep; `modes` is a list of `"sup"` / `"semi"`.
#[pyfunction]
#[pyo3(signature = (streams, windows, overlaps, modes=vec!["sup".to_string(), "semi".to_string()], seed=0, workers=1))]
fn sweep(
    py: Python<'_>,
    streams: Vec<PySensorStream>,
    windows: Vec<usize>,
    overlaps: Vec<f64>,
    modes: Vec<String>,
    seed: u64,
    workers: usize,
) -> PyResult<Vec<PyFoldResult>> {
    let grid = eval::Grid::new(windows, overlaps).map_err(to_py)?;
    let mut options = SweepOptions::new(grid, seed);
    options.modes = modes.iter().map(|m| parse_mode(m)).collect::<PyResult<_>>()?;
    options.workers = workers;
    let streams = unwrap_streams(&streams);
    let report = py.detach(|| eval::sweep(&streams, &options)).map_err(to_py)?;
    Ok(report.cells.into_iter().map(|inner| PyFoldResult { inner }).collect())
}

#[pymodule]
fn pyharsweep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindowConfig>()?;
    m.add_class::<PySensorStream>()?;
    m.add_class::<PySyntheticSpec>()?;
    m.add_class::<PyFeatureVector>()?;
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyEnsembleModel>()?;
    m.add_class::<PyFoldResult>()?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding_bound, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_user, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("FEATURE_COUNT", features::FEATURE_COUNT)?;
    Ok(())
}
