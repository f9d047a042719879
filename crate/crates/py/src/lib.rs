//! Python bindings: points, profiles, capacities, bounds, radial maps and the set function.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ringq::bounds::{self, BoundConstants};
use ringq::geom;
use ringq::maps::{self, RadialMap};
use ringq::modulus::{self, Condenser, SolverOptions};
use ringq::qprofile::{self, QProfile};
use ringq::report::{self, ReportConfig};
use ringq::setfn::{self, CompactSet, SetFnOptions};
use ringq::{Error, ExtPoint};

create_exception!(ringq, ConvergenceError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Convergence { .. } => ConvergenceError::new_err(e.to_string()),
        Error::Evaluation(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ringq::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A point of compactified n-space: finite coordinates or infinity.
#[pyclass(name = "ExtPoint", frozen)]
struct PyExtPoint {
    inner: ExtPoint,
}

#[pymethods]
impl PyExtPoint {
    #[new]
    fn new(coords: Vec<f64>) -> PyResult<Self> {
        Ok(PyExtPoint { inner: ExtPoint::finite(coords).py()? })
    }

    #[staticmethod]
    fn infinity(n: usize) -> PyResult<Self> {
        Ok(PyExtPoint { inner: ExtPoint::infinity(n).py()? })
    }

    /// Coordinates, or `None` at infinity.
    #[getter]
    fn coords(&self) -> Option<Vec<f64>> {
        self.inner.coords().map(<[f64]>::to_vec)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn is_infinity(&self) -> bool {
        self.inner.is_infinity()
    }

    fn antipodal(&self) -> Self {
        PyExtPoint { inner: geom::antipodal(&self.inner) }
    }

    fn __repr__(&self) -> String {
        format!("ExtPoint({})", self.inner)
    }
}

#[pyfunction]
fn chordal_distance(x: PyRef<'_, PyExtPoint>, y: PyRef<'_, PyExtPoint>) -> PyResult<f64> {
    geom::chordal_distance(&x.inner, &y.inner).py()
}

#[pyfunction]
fn chordal_radius_to_euclidean(t: f64) -> PyResult<f64> {
    geom::chordal_radius_to_euclidean(t).py()
}

#[pyfunction]
fn omega(n: usize) -> PyResult<f64> {
    ringq::quadrature::omega(n).py()
}

#[pyfunction]
fn ring_modulus_exact(r1: f64, r2: f64, n: usize) -> PyResult<f64> {
    modulus::ring_modulus_exact(r1, r2, n).py()
}

#[pyclass(name = "CapacityResult", frozen, get_all)]
struct PyCapacityResult {
    value: f64,
    iterations: usize,
    residual: f64,
    grid: usize,
}

/// Grid capacity of the spherical condenser `(B(0, r2), B̄(0, r1))`.
#[pyfunction]
#[pyo3(signature = (n, r1, r2, grid, tol = 1e-5))]
fn capacity_ring(py: Python<'_>, n: usize, r1: f64, r2: f64, grid: usize, tol: f64) -> PyResult<PyCapacityResult> {
    let res = py
        .detach(|| {
            let c = Condenser::spherical_ring(n, r1, r2, grid)?;
            modulus::capacity_numeric(&c, &SolverOptions::default().with_tol(tol))
        })
        .py()?;
    Ok(PyCapacityResult { value: res.value, iterations: res.iterations, residual: res.residual, grid: res.grid })
}

/// A dilatation profile `Q` with its spherical means.
#[pyclass(name = "QProfile", frozen)]
struct PyQProfile {
    inner: QProfile,
}

#[pymethods]
impl PyQProfile {
    /// Named profile: `const:K`, `log`, `logc`, `log2`, `powlog:C`, `exp`.
    #[new]
    fn new(name: &str, n: usize) -> PyResult<Self> {
        Ok(PyQProfile { inner: QProfile::named(name, n).py()? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    fn q_mean(&self, r: f64) -> PyResult<f64> {
        qprofile::q_mean(&self.inner, r).py()
    }

    /// `(value, diverges)` of the probe of `∫_0^{eps0} dt/(t q^{1/(n-1)})`.
    fn dini(&self, eps0: f64) -> PyResult<(f64, bool)> {
        let d = qprofile::dini_integral(&self.inner, eps0).py()?;
        Ok((d.value, d.diverges))
    }

    /// `(∫ Q ψⁿ, ω_{n-1} I)` for `ψ = 1/(t q^{1/(n-1)})` on `(eps, eps0)`.
    fn weighted_energy(&self, eps: f64, eps0: f64) -> PyResult<(f64, f64)> {
        let psi = qprofile::psi_from_q(&self.inner, eps, eps0).py()?;
        let f = qprofile::weighted_annulus_integral(&self.inner, &psi, eps, eps0).py()?;
        let i = qprofile::i_integral(&psi, eps, eps0).py()?.value;
        Ok((f, ringq::quadrature::omega(self.inner.dim()).py()? * i))
    }

    fn __repr__(&self) -> String {
        format!("QProfile('{}', n={})", self.inner.label(), self.inner.dim())
    }
}

/// Numeric `∫_eps^{eps0} dt/(t log(1/t))`.
#[pyfunction]
fn canonical_integral(eps: f64, eps0: f64) -> PyResult<f64> {
    Ok(qprofile::i_integral(&qprofile::PsiFunction::canonical(), eps, eps0).py()?.value)
}

#[pyfunction]
fn canonical_integral_closed_form(eps: f64, eps0: f64) -> PyResult<f64> {
    qprofile::i_canonical_closed_form(eps, eps0).py()
}

#[pyclass(name = "BoundConstants", frozen, get_all)]
struct PyBoundConstants {
    n: usize,
    lambda_n: f64,
    k: f64,
    p: f64,
    alpha_n: f64,
    beta_n: f64,
    beta_n_tilde: f64,
    gamma_np: f64,
}

impl PyBoundConstants {
    fn inner(&self) -> PyResult<BoundConstants> {
        bounds::make_constants(self.n, self.k, self.p, Some(self.lambda_n)).py()
    }
}

#[pyfunction]
#[pyo3(signature = (n, k, p, lam = None))]
fn make_constants(n: usize, k: f64, p: f64, lam: Option<f64>) -> PyResult<PyBoundConstants> {
    let c = bounds::make_constants(n, k, p, lam).py()?;
    Ok(PyBoundConstants {
        n: c.n,
        lambda_n: c.lambda_n,
        k: c.k,
        p: c.p,
        alpha_n: c.alpha_n,
        beta_n: c.beta_n,
        beta_n_tilde: c.beta_n_tilde,
        gamma_np: c.gamma_np,
    })
}

#[pyfunction]
fn distortion_bound(c: PyRef<'_, PyBoundConstants>, delta: f64, i_val: f64) -> PyResult<f64> {
    bounds::distortion_bound(&c.inner()?, delta, i_val).py()
}

#[pyfunction]
fn normalized_distortion_bound(c: PyRef<'_, PyBoundConstants>, i_val: f64) -> PyResult<f64> {
    bounds::normalized_distortion_bound(&c.inner()?, i_val).py()
}

#[pyfunction]
fn log_order_bound(c_n: f64, p: f64, dist: f64) -> PyResult<f64> {
    bounds::log_order_bound(c_n, p, dist).py()
}

#[pyfunction]
fn dini_bound(q: PyRef<'_, PyQProfile>, eps0: f64, dist: f64, alpha_n: f64) -> PyResult<f64> {
    bounds::dini_bound(&q.inner, eps0, dist, alpha_n).py()
}

#[pyfunction]
fn log_power_bound(m: f64, c: f64, n: usize, dist: f64) -> PyResult<f64> {
    bounds::log_power_bound(m, c, n, dist).py()
}

/// A radial map `x ↦ x ρ(|x|)/|x|` of the unit ball.
#[pyclass(name = "RadialMap", frozen)]
struct PyRadialMap {
    inner: RadialMap,
}

#[pymethods]
impl PyRadialMap {
    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Ok(PyRadialMap { inner: RadialMap::identity(n).py()? })
    }

    /// The map whose inner dilatation equals the profile's spherical mean.
    #[staticmethod]
    fn from_profile(q: PyRef<'_, PyQProfile>) -> PyResult<Self> {
        Ok(PyRadialMap { inner: RadialMap::from_profile(&q.inner).py()? })
    }

    /// Member `f_m` built from the profile truncated at `1/m`.
    #[staticmethod]
    fn family_member(q: PyRef<'_, PyQProfile>, m: usize) -> PyResult<Self> {
        Ok(PyRadialMap { inner: maps::rho_m_build(&q.inner, m).py()? })
    }

    fn rho(&self, r: f64) -> f64 {
        self.inner.rho(r)
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        maps::radial_map_eval(&self.inner, &x).py()
    }

    fn inner_dilatation(&self, r: f64) -> PyResult<f64> {
        maps::inner_dilatation_radial(&self.inner, r).py()
    }
}

#[pyclass(name = "RingCheck", frozen, get_all)]
struct PyRingCheck {
    lhs: f64,
    rhs: Vec<f64>,
    extremal_rhs: f64,
    worst_slack: f64,
    extremal_slack: f64,
    violations: usize,
}

#[pyfunction]
#[pyo3(signature = (f, q, r1, r2, samples = 100, seed = 2024))]
fn verify_ring_q_inequality(
    f: PyRef<'_, PyRadialMap>,
    q: PyRef<'_, PyQProfile>,
    r1: f64,
    r2: f64,
    samples: usize,
    seed: u64,
) -> PyResult<PyRingCheck> {
    let c = maps::verify_ring_q_inequality(&f.inner, &q.inner, r1, r2, samples, seed).py()?;
    Ok(PyRingCheck {
        lhs: c.lhs,
        rhs: c.rhs,
        extremal_rhs: c.extremal_rhs,
        worst_slack: c.worst_slack,
        extremal_slack: c.extremal_slack,
        violations: c.violations,
    })
}

/// `([(m, |f_m(e1/m)|)], sigma)` for the truncated family of a profile; `sigma` is
/// `None` when the Dini-type integral diverges.
#[pyfunction]
fn family_diagonal(q: PyRef<'_, PyQProfile>, m_max: usize) -> PyResult<(Vec<(usize, f64)>, Option<f64>)> {
    let fam = maps::MapFamily::truncated(&q.inner, m_max).py()?;
    let rep = maps::equicontinuity_experiment(&fam, &[]).py()?;
    Ok((rep.diagonal, rep.sigma))
}

/// A finite union of points, balls, segments, boxes and chordal caps.
#[pyclass(name = "CompactSet", frozen)]
struct PyCompactSet {
    inner: CompactSet,
}

#[pymethods]
impl PyCompactSet {
    /// One primitive per line: `point ..`, `ball .. r`, `segment a.. b..`, `box lo.. hi..`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::parse(text).py()? })
    }

    #[staticmethod]
    fn point(p: Vec<f64>) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::point(p).py()? })
    }

    #[staticmethod]
    fn segment(a: Vec<f64>, b: Vec<f64>) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::segment(a, b).py()? })
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::ball(center, radius).py()? })
    }

    #[staticmethod]
    fn cap(center: PyRef<'_, PyExtPoint>, radius: f64) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::cap(center.inner.clone(), radius).py()? })
    }

    fn union(&self, other: PyRef<'_, PyCompactSet>) -> PyResult<Self> {
        Ok(PyCompactSet { inner: CompactSet::union(&[self.inner.clone(), other.inner.clone()]).py()? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn chordal_diameter(&self) -> PyResult<f64> {
        self.inner.chordal_diameter().py()
    }
}

fn setfn_options(grid: usize, tol: f64) -> SetFnOptions {
    SetFnOptions { grid, solver: SolverOptions::default().with_tol(tol) }
}

/// `m(E, x) = m_{√3/2}(E, √2/2, x)`.
#[pyfunction]
#[pyo3(signature = (e, x, grid = 64, tol = 1e-5))]
fn m_standard(py: Python<'_>, e: PyRef<'_, PyCompactSet>, x: PyRef<'_, PyExtPoint>, grid: usize, tol: f64) -> PyResult<f64> {
    let (e, x) = (e.inner.clone(), x.inner.clone());
    py.detach(|| setfn::m_standard(&e, &x, &setfn_options(grid, tol))).py()
}

/// `(c, argmin)`: the set function over the default search grid, optionally refined.
#[pyfunction]
#[pyo3(signature = (e, grid = 64, tol = 1e-5, refine = false))]
fn c_set(py: Python<'_>, e: PyRef<'_, PyCompactSet>, grid: usize, tol: f64, refine: bool) -> PyResult<(f64, PyExtPoint)> {
    let e = e.inner.clone();
    let v = py
        .detach(|| {
            let o = setfn_options(grid, tol);
            if refine {
                setfn::c_set_search(&e, &o)
            } else {
                setfn::c_set(&e, &setfn::default_x_grid(e.dim())?, &o)
            }
        })
        .py()?;
    Ok((v.value, PyExtPoint { inner: v.argmin }))
}

#[pyfunction]
fn set_function_cap(n: usize) -> PyResult<f64> {
    setfn::set_function_cap(n).py()
}

/// `[(criterion, name, passed, measured, threshold)]` for every acceptance criterion.
#[pyfunction]
#[pyo3(signature = (quick = true, seed = 2024))]
fn report_all(py: Python<'_>, quick: bool, seed: u64) -> Vec<(usize, String, bool, String, String)> {
    let mut cfg = if quick { ReportConfig::quick() } else { ReportConfig::default() };
    cfg.seed = seed;
    py.detach(|| report::report_all(&cfg))
        .into_iter()
        .map(|o| (o.id, o.name.to_string(), o.passed, o.measured, o.threshold))
        .collect()
}

#[pymodule(name = "ringq")]
fn ringq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_class::<PyExtPoint>()?;
    m.add_class::<PyCapacityResult>()?;
    m.add_class::<PyQProfile>()?;
    m.add_class::<PyBoundConstants>()?;
    m.add_class::<PyRadialMap>()?;
    m.add_class::<PyRingCheck>()?;
    m.add_class::<PyCompactSet>()?;
    m.add_function(wrap_pyfunction!(chordal_distance, m)?)?;
    m.add_function(wrap_pyfunction!(chordal_radius_to_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(ring_modulus_exact, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_ring, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_integral, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_integral_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(make_constants, m)?)?;
    m.add_function(wrap_pyfunction!(distortion_bound, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_distortion_bound, m)?)?;
    m.add_function(wrap_pyfunction!(log_order_bound, m)?)?;
    m.add_function(wrap_pyfunction!(dini_bound, m)?)?;
    m.add_function(wrap_pyfunction!(log_power_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_ring_q_inequality, m)?)?;
    m.add_function(wrap_pyfunction!(family_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(m_standard, m)?)?;
    m.add_function(wrap_pyfunction!(c_set, m)?)?;
    m.add_function(wrap_pyfunction!(set_function_cap, m)?)?;
    m.add_function(wrap_pyfunction!(report_all, m)?)?;
    Ok(())
}
