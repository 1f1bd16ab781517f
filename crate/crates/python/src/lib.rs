//! Python bindings: images, point sets, the adaptive models, the ncut
//! baseline and the evaluation metrics.

use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ncas_core::io::MoonSpec;
use ncas_core::{baselines, io, metrics, solver, Input, NcasError, Neighborhood};

fn to_py(e: NcasError) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else if e.is_divergence() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn to_u8(labels: &[u32]) -> PyResult<Vec<u8>> {
    labels
        .iter()
        .map(|&v| u8::try_from(v).map_err(|_| PyValueError::new_err(format!("label {v} exceeds 255"))))
        .collect()
}

fn widen(labels: &[u8]) -> Vec<u32> {
    labels.iter().map(|&v| u32::from(v)).collect()
}

/// Model and solver parameters. `lam` is the coupling weight.
#[pyclass(name = "SolverConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ncas_core::SolverConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        lam=None, eta=None, epsilon=None, tau=None, h0=None, h_min=None, h_max=None,
        inner_iters=None, outer_iters=None, tol=None, window=None, knn=None, seed=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        lam: Option<f64>,
        eta: Option<f64>,
        epsilon: Option<f64>,
        tau: Option<f64>,
        h0: Option<f64>,
        h_min: Option<f64>,
        h_max: Option<f64>,
        inner_iters: Option<usize>,
        outer_iters: Option<usize>,
        tol: Option<f64>,
        window: Option<usize>,
        knn: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut c = ncas_core::SolverConfig::default();
        c.lambda = lam.unwrap_or(c.lambda);
        c.eta = eta.unwrap_or(c.eta);
        c.epsilon_penalty = epsilon.unwrap_or(c.epsilon_penalty);
        c.tau = tau.unwrap_or(c.tau);
        c.h0 = h0.unwrap_or(c.h0);
        c.h_min = h_min.unwrap_or(c.h_min);
        c.h_max = h_max.unwrap_or(c.h_max);
        c.inner_iters = inner_iters.unwrap_or(c.inner_iters);
        c.outer_iters = outer_iters.unwrap_or(c.outer_iters);
        c.outer_tol = tol.unwrap_or(c.outer_tol);
        c.window_radius = window.unwrap_or(c.window_radius);
        c.knn = knn.unwrap_or(c.knn);
        c.seed = seed.unwrap_or(c.seed);
        c.validate().map_err(to_py)?;
        Ok(Self { inner: c })
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon_penalty
    }

    #[getter]
    fn h0(&self) -> f64 {
        self.inner.h0
    }

    #[getter]
    fn outer_iters(&self) -> usize {
        self.inner.outer_iters
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Grayscale image with intensities in [0, 255].
#[pyclass(name = "Image", from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: ncas_core::ScalarField,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, values: Vec<f64>) -> PyResult<Self> {
        let inner = ncas_core::ScalarField::image(width, height, values).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Loads an 8-bit PNG or PGM.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::load_grayscale(path).map_err(to_py)?,
        })
    }

    /// Disc of `inside` on `outside`; returns the image and its truth labels.
    #[staticmethod]
    #[pyo3(signature = (width=100, height=100, radius=30.0, inside=170.0, outside=80.0))]
    fn two_region(
        width: usize,
        height: usize,
        radius: f64,
        inside: f64,
        outside: f64,
    ) -> PyResult<(Self, Vec<u32>)> {
        let (inner, truth) =
            io::two_region_image(width, height, radius, inside, outside).map_err(to_py)?;
        Ok((Self { inner }, widen(&truth)))
    }

    /// Gaussian noise with variance quoted on the [0, 1] intensity scale.
    #[pyo3(signature = (variance, seed=0))]
    fn with_noise(&self, variance: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: io::add_gaussian_noise(&self.inner, variance, seed).map_err(to_py)?,
        })
    }

    fn resized(&self, width: usize, height: usize) -> PyResult<Self> {
        Ok(Self {
            inner: io::resize_bilinear(&self.inner, width, height).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Points in the plane with optional 0/1 truth labels.
#[pyclass(name = "PointSet", from_py_object)]
#[derive(Clone)]
struct PyPointSet {
    inner: ncas_core::PointSet,
}

#[pymethods]
impl PyPointSet {
    #[new]
    #[pyo3(signature = (coords, truth=None))]
    fn new(coords: Vec<(f64, f64)>, truth: Option<Vec<u32>>) -> PyResult<Self> {
        let flat = coords.iter().flat_map(|&(x, y)| [x, y]).collect();
        let truth = truth.as_deref().map(to_u8).transpose()?;
        Ok(Self {
            inner: ncas_core::PointSet::new(2, flat, truth).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n=300, noise=0.0, seed=0))]
    fn double_moon(n: usize, noise: f64, seed: u64) -> PyResult<Self> {
        let spec = MoonSpec {
            n,
            noise_sigma: noise,
            seed,
            ..Default::default()
        };
        Ok(Self {
            inner: io::double_moon(spec).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::read_points_csv(path).map_err(to_py)?,
        })
    }

    #[getter]
    fn coords(&self) -> Vec<(f64, f64)> {
        self.inner.coords().chunks(2).map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn truth(&self) -> Option<Vec<u32>> {
        self.inner.truth().map(widen)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Labels, phase field and per-iteration traces of an adaptive run.
#[pyclass(name = "Segmentation", get_all)]
struct PySegmentation {
    labels: Vec<u32>,
    phase: Vec<f64>,
    h_trace: Vec<f64>,
    energy_trace: Vec<f64>,
    mu_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl From<solver::SegmentationResult> for PySegmentation {
    fn from(r: solver::SegmentationResult) -> Self {
        Self {
            labels: widen(&r.labels),
            phase: r.phase,
            h_trace: r.h_trace,
            energy_trace: r.energy_trace,
            mu_trace: r.mu_trace,
            iterations: r.iterations_run,
            converged: r.converged,
        }
    }
}

#[pymethods]
impl PySegmentation {
    fn __repr__(&self) -> String {
        format!(
            "Segmentation(n={}, iterations={}, converged={}, h={})",
            self.labels.len(),
            self.iterations,
            self.converged,
            self.h_trace.last().map_or("none".into(), |h| format!("{h:.4}"))
        )
    }
}

/// Either an Image or a PointSet.
#[derive(FromPyObject)]
enum AnyInput {
    Image(PyImage),
    Points(PyPointSet),
}

impl AnyInput {
    fn as_input(&self) -> Input<'_> {
        match self {
            AnyInput::Image(i) => Input::Image(&i.inner),
            AnyInput::Points(p) => Input::Points(&p.inner),
        }
    }
}

fn config_or_default(config: Option<PyConfig>) -> ncas_core::SolverConfig {
    config.map(|c| c.inner).unwrap_or_default()
}

/// Dirichlet-regularized adaptive model on an image or a point set.
#[pyfunction]
#[pyo3(signature = (data, config=None))]
fn ncash1(py: Python<'_>, data: AnyInput, config: Option<PyConfig>) -> PyResult<PySegmentation> {
    let config = config_or_default(config);
    let r = py.detach(|| solver::run_ncash1(data.as_input(), &config));
    Ok(r.map_err(to_py)?.into())
}

/// Split-TV adaptive model on an image.
#[pyfunction]
#[pyo3(signature = (image, config=None))]
fn ncastv(py: Python<'_>, image: PyImage, config: Option<PyConfig>) -> PyResult<PySegmentation> {
    let config = config_or_default(config);
    let r = py.detach(|| solver::run_ncastv(Input::Image(&image.inner), &config));
    Ok(r.map_err(to_py)?.into())
}

/// Fixed Gaussian-weight normalized cut. Images use a square window of
/// half-width `window`, point sets a kNN graph with `knn` neighbors.
/// Returns `(labels, eigenvalue)`.
#[pyfunction]
#[pyo3(signature = (data, h, window=10, knn=20))]
fn ncut(py: Python<'_>, data: AnyInput, h: f64, window: usize, knn: usize) -> PyResult<(Vec<u32>, f64)> {
    let r = py.detach(|| {
        let graph = match &data {
            AnyInput::Image(i) => Neighborhood::grid_window(i.inner.width(), i.inner.height(), window),
            AnyInput::Points(p) => Neighborhood::knn(p.inner.features(), knn),
        }?;
        baselines::run_ncut(data.as_input(), &Arc::new(graph), h)
    });
    let r = r.map_err(to_py)?;
    Ok((widen(&r.labels), r.eigenvalue))
}

/// Total-variation denoising of a `width x height` field.
#[pyfunction]
fn rof_denoise(py: Python<'_>, width: usize, height: usize, values: Vec<f64>, weight: f64) -> PyResult<Vec<f64>> {
    py.detach(|| solver::rof_denoise(width, height, &values, weight))
        .map_err(to_py)
}

#[pyfunction]
fn variation_of_information(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    metrics::variation_of_information(&a, &b).map_err(to_py)
}

/// Rand index of `pred` averaged over one or more truths.
#[pyfunction]
fn rand_index(pred: Vec<u32>, truths: Vec<Vec<u32>>) -> PyResult<f64> {
    let refs: Vec<&[u32]> = truths.iter().map(Vec::as_slice).collect();
    metrics::rand_index(&pred, &refs).map_err(to_py)
}

#[pyfunction]
fn misclassification_count(pred: Vec<u32>, truth: Vec<u32>) -> PyResult<usize> {
    metrics::misclassification_count(&to_u8(&pred)?, &to_u8(&truth)?).map_err(to_py)
}

#[pyfunction]
fn save_labels(labels: Vec<u32>, width: usize, height: usize, path: &str) -> PyResult<()> {
    io::save_labels(&to_u8(&labels)?, width, height, path).map_err(to_py)
}

#[pymodule]
fn ncas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyPointSet>()?;
    m.add_class::<PySegmentation>()?;
    m.add_function(wrap_pyfunction!(ncash1, m)?)?;
    m.add_function(wrap_pyfunction!(ncastv, m)?)?;
    m.add_function(wrap_pyfunction!(ncut, m)?)?;
    m.add_function(wrap_pyfunction!(rof_denoise, m)?)?;
    m.add_function(wrap_pyfunction!(variation_of_information, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(misclassification_count, m)?)?;
    m.add_function(wrap_pyfunction!(save_labels, m)?)?;
    Ok(())
}
