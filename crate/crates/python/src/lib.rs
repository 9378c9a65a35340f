//! Python module `cusplab`: maps, estimators and induced Markov maps.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cusplab::ergodic::{self, ApproachSide, DecayModel, Weight};
use cusplab::extension::{self, BranchPolicy};
use cusplab::inducing::{self, InducedMarkovMap};
use cusplab::maps::OrbitStart;
use cusplab::{Error, OpenInterval, PiecewiseMap};

/// Bad arguments become `ValueError`, everything else `RuntimeError`.
fn is_value_error(e: &Error) -> bool {
    matches!(e, Error::Domain(_) | Error::InvalidInterval { .. })
}

fn py_err(e: Error) -> PyErr {
    if is_value_error(&e) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn side(name: &str) -> Result<ApproachSide, String> {
    match name {
        "left" => Ok(ApproachSide::Left),
        "right" => Ok(ApproachSide::Right),
        "both" => Ok(ApproachSide::Both),
        other => Err(format!("unknown side {other:?}")),
    }
}

fn weight(name: &str) -> Result<Weight, String> {
    match name {
        "exact" => Ok(Weight::ExactDensity),
        "lebesgue" => Ok(Weight::Lebesgue),
        other => Err(format!("unknown weight {other:?}")),
    }
}

fn policy(name: &str) -> Result<BranchPolicy, String> {
    match name {
        "uniform" => Ok(BranchPolicy::Uniform),
        "density" => Ok(BranchPolicy::DensityWeighted),
        other => Err(format!("unknown policy {other:?}")),
    }
}

fn lower(v: impl std::fmt::Debug) -> String {
    format!("{v:?}").to_lowercase()
}

/// A piecewise interval map from one of the built-in families.
#[pyclass(name = "Map", module = "cusplab", frozen)]
struct PyMap(PiecewiseMap);

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn tent() -> Self {
        PyMap(PiecewiseMap::tent())
    }

    #[staticmethod]
    fn g_alpha(alpha: f64) -> PyResult<Self> {
        PiecewiseMap::g_alpha(alpha).map(PyMap).map_err(py_err)
    }

    #[staticmethod]
    fn f_alpha(alpha: f64) -> PyResult<Self> {
        PiecewiseMap::f_alpha(alpha).map(PyMap).map_err(py_err)
    }

    #[staticmethod]
    fn g_b(b: f64, alpha: f64) -> PyResult<Self> {
        PiecewiseMap::g_b(b, alpha).map(PyMap).map_err(py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_owned()
    }

    #[getter]
    fn ambient(&self) -> (f64, f64) {
        let a = self.0.ambient();
        (a.lo(), a.hi())
    }

    #[getter]
    fn branch_count(&self) -> usize {
        self.0.branches().len()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.0.eval(x).map_err(py_err)
    }

    fn log_abs_deriv(&self, x: f64) -> PyResult<f64> {
        self.0.log_abs_deriv(x).map_err(py_err)
    }

    /// Exact invariant density, for tent-conjugate maps.
    fn density(&self, x: f64) -> PyResult<Option<f64>> {
        Ok(self.0.conjugacy().map(|c| c.log_density(&self.0.point(x)).exp()))
    }

    fn __repr__(&self) -> String {
        format!("Map({})", self.0.name())
    }
}

#[pyclass(name = "Classification", module = "cusplab", frozen, get_all)]
struct PyClassification {
    verdict: String,
    model: String,
    fitted_exponent: f64,
    fitted_ratio: f64,
    annulus_sums: Vec<f64>,
}

#[pyclass(name = "Series", module = "cusplab", frozen, get_all)]
struct PySeries {
    ratio: f64,
    verdict: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    lower_limit: Option<f64>,
    upper_limit: Option<f64>,
}

#[pyclass(name = "Pullback", module = "cusplab", frozen, get_all)]
struct PyPullback {
    points: Vec<f64>,
    lengths: Vec<f64>,
    log_lengths: Vec<f64>,
    distortion: Vec<f64>,
    shrink_events: usize,
}

/// First-return map to a nice interval, cut off at a maximal return time.
#[pyclass(name = "InducedMap", module = "cusplab", frozen)]
struct PyInducedMap(InducedMarkovMap);

#[pymethods]
impl PyInducedMap {
    #[getter]
    fn branch_count(&self) -> usize {
        self.0.branches.len()
    }

    #[getter]
    fn kac_sum(&self) -> f64 {
        self.0.kac_sum()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual_measure
    }

    #[getter]
    fn lambda_min(&self) -> f64 {
        self.0.lambda_min
    }

    #[getter]
    fn return_order(&self) -> usize {
        self.0.return_order
    }

    /// `(lo, hi, return_time)` of every branch.
    fn branches(&self) -> Vec<(f64, f64, usize)> {
        self.0.branches.iter().map(|b| (b.lo.x(), b.hi.x(), b.return_time)).collect()
    }

    /// Invariant density of the induced map on `bins` bins of U.
    #[pyo3(signature = (bins=512, iterations=1000))]
    fn induced_density(&self, bins: usize, iterations: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let r = inducing::transfer_density(&self.0, bins, iterations).map_err(py_err)?;
        Ok(centers_and_values(&r.density))
    }

    /// Invariant density of the base map spread from the induced one.
    #[pyo3(signature = (bins=1024))]
    fn spread(&self, bins: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let nu = inducing::transfer_density(&self.0, 512, 1000).map_err(py_err)?;
        let mu = inducing::spread_measure(&self.0, &nu.density, bins).map_err(py_err)?;
        Ok(centers_and_values(&mu))
    }
}

fn centers_and_values(est: &ergodic::DensityEstimate) -> (Vec<f64>, Vec<f64>) {
    let centers = (0..est.bin_count)
        .map(|i| {
            let (a, b) = est.edges(i);
            0.5 * (a + b)
        })
        .collect();
    (centers, est.densities())
}

/// Birkhoff average of `log|Df|` along an orbit started from the invariant measure.
#[pyfunction]
#[pyo3(signature = (map, n, seed=0))]
fn lyapunov(map: &PyMap, n: usize, seed: u64) -> PyResult<f64> {
    ergodic::birkhoff_lyapunov(&map.0, OrbitStart::Invariant, n, 0, seed)
        .map(|e| e.chi)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (map, point=0.0, side="right", weight="exact", k_lo=8, k_hi=48))]
fn classify(map: &PyMap, point: f64, side: &str, weight: &str, k_lo: usize, k_hi: usize) -> PyResult<PyClassification> {
    let s = self::side(side).map_err(PyValueError::new_err)?;
    let w = self::weight(weight).map_err(PyValueError::new_err)?;
    let v = ergodic::singular_integral_classify(&map.0, point, s, w, (k_lo, k_hi)).map_err(py_err)?;
    Ok(PyClassification {
        verdict: lower(v.verdict),
        model: match v.model {
            DecayModel::Geometric => "geometric".into(),
            DecayModel::PowerLaw => "power_law".into(),
        },
        fitted_exponent: v.fitted_exponent,
        fitted_ratio: v.fitted_ratio,
        annulus_sums: v.annulus_sums,
    })
}

#[pyfunction]
#[pyo3(signature = (alpha, p=0.5, offset=1, terms=200))]
fn series(alpha: f64, p: f64, offset: u32, terms: usize) -> PyResult<PySeries> {
    let r = ergodic::infinite_exponent_series(alpha, p, offset, terms).map_err(py_err)?;
    Ok(PySeries {
        ratio: r.ratio,
        verdict: lower(r.verdict),
        lower: r.lower,
        upper: r.upper,
        lower_limit: r.lower_limit,
        upper_limit: r.upper_limit,
    })
}

/// `(word_length, rate)` pairs over the branch partition.
#[pyfunction]
#[pyo3(signature = (map, n, words, seed=0))]
fn entropy(map: &PyMap, n: usize, words: Vec<usize>, seed: u64) -> PyResult<Vec<(usize, f64)>> {
    let partition: Vec<OpenInterval> = map.0.branches().iter().map(|b| b.domain()).collect();
    ergodic::entropy_word_count(&map.0, &partition, OrbitStart::Invariant, n, &words, seed)
        .map(|e| e.rates)
        .map_err(py_err)
}

/// Orbit histogram: bin centers and densities.
#[pyfunction]
#[pyo3(signature = (map, n, bins=100, seed=0))]
fn density(map: &PyMap, n: usize, bins: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let est = ergodic::density_histogram(&map.0, OrbitStart::Invariant, n, bins, seed).map_err(py_err)?;
    Ok(centers_and_values(&est))
}

/// Per-point slopes and the pooled slope of `log μ(B(x, r))` against `log r`.
#[pyfunction]
fn local_dimension(points: Vec<f64>, samples: Vec<f64>, radii: Vec<f64>) -> PyResult<(Vec<Option<f64>>, f64)> {
    let est = ergodic::local_dimension(&points, &samples, &radii).map_err(py_err)?;
    Ok((est.per_point.iter().map(|p| p.slope).collect(), est.pooled))
}

#[pyfunction]
#[pyo3(signature = (map, y0, radius=0.05, n=60, policy="density", seed=0))]
fn pullback(map: &PyMap, y0: f64, radius: f64, n: usize, policy: &str, seed: u64) -> PyResult<PyPullback> {
    let p = self::policy(policy).map_err(PyValueError::new_err)?;
    let orbit = extension::backward_orbit(&map.0, y0, n, p, seed).map_err(py_err)?;
    let amb = map.0.ambient();
    let v = OpenInterval::new((y0 - radius).max(amb.lo()), (y0 + radius).min(amb.hi())).map_err(py_err)?;
    let tr = extension::pullback_interval(&map.0, &orbit, v).map_err(py_err)?;
    Ok(PyPullback {
        points: orbit.xs(),
        lengths: tr.lengths,
        log_lengths: tr.log_lengths,
        distortion: tr.distortion_partial_sums,
        shrink_events: tr.shrink_events,
    })
}

/// Induced full-branch Markov map on the nice interval `(u_lo, u_hi)`.
#[pyfunction]
#[pyo3(signature = (map, u_lo, u_hi, depth=16))]
fn induce(map: &PyMap, u_lo: f64, u_hi: f64, depth: usize) -> PyResult<PyInducedMap> {
    let u = OpenInterval::new(u_lo, u_hi).map_err(py_err)?;
    inducing::build_induced(&map.0, u, depth, 1).map(PyInducedMap).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "cusplab")]
fn cusplab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_class::<PyClassification>()?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyPullback>()?;
    m.add_class::<PyInducedMap>()?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(local_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(pullback, m)?)?;
    m.add_function(wrap_pyfunction!(induce, m)?)?;
    Ok(())
}
