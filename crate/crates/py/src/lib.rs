//! Python bindings: thin wrappers over res12-core with keyword arguments
//! and plain lists/dicts on the boundary.
// Guards are written `!(x > 0.0)` on purpose: the negated form also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use res12_core as core;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Static frequency-shift parameters of the two levels.
#[pyclass(name = "SystemParams")]
#[derive(Clone, Copy, Default)]
struct PySystemParams {
    inner: core::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (lambda_a=0.0, lambda_s=0.0))]
    fn new(lambda_a: f64, lambda_s: f64) -> Self {
        PySystemParams { inner: core::SystemParams { lambda_a, lambda_s } }
    }

    #[getter]
    fn lambda_a(&self) -> f64 {
        self.inner.lambda_a
    }

    #[getter]
    fn lambda_s(&self) -> f64 {
        self.inner.lambda_s
    }

    fn __repr__(&self) -> String {
        format!("SystemParams(lambda_a={}, lambda_s={})", self.inner.lambda_a, self.inner.lambda_s)
    }
}

fn params_of(p: Option<PySystemParams>) -> core::SystemParams {
    p.map(|p| p.inner).unwrap_or_default()
}

enum PulseKind {
    Constant(core::ConstantPulse),
    Tracking(core::TrackingPulse),
    Robust(core::RobustPulse),
}

impl PulseKind {
    fn as_dyn(&self) -> &dyn core::Pulse {
        match self {
            PulseKind::Constant(p) => p,
            PulseKind::Tracking(p) => p,
            PulseKind::Robust(p) => p,
        }
    }
}

/// A control pulse: time-dependent drive amplitude and detuning.
#[pyclass(name = "Pulse")]
struct PyPulse {
    kind: PulseKind,
}

#[pymethods]
impl PyPulse {
    /// Constant fields; has no natural time span.
    #[staticmethod]
    fn constant(omega: f64, delta: f64) -> PyResult<Self> {
        if !(omega >= 0.0) {
            return Err(PyValueError::new_err(format!("omega must be >= 0, got {omega}")));
        }
        Ok(PyPulse { kind: PulseKind::Constant(core::ConstantPulse { omega, delta }) })
    }

    /// Self-tracking sech drive with the matched detuning sweep.
    #[staticmethod]
    #[pyo3(signature = (omega0=10.0, t_char=1.0))]
    fn tracking(omega0: f64, t_char: f64) -> PyResult<Self> {
        if !(omega0 > 0.0 && t_char > 0.0) {
            return Err(PyValueError::new_err("tracking pulse needs omega0 > 0 and t_char > 0"));
        }
        let design = core::TrackingDesign { omega0, t_char };
        Ok(PyPulse { kind: PulseKind::Tracking(core::TrackingPulse::new(design)) })
    }

    /// Error-compensating pulse shaped from the phase-series ansatz.
    #[staticmethod]
    #[pyo3(signature = (epsilon=0.03, coefficients=vec![-0.5], t_char=1.0, params=None))]
    fn robust(
        epsilon: f64,
        coefficients: Vec<f64>,
        t_char: f64,
        params: Option<PySystemParams>,
    ) -> PyResult<Self> {
        let design = core::RobustDesign::new(epsilon, coefficients, t_char).map_err(err)?;
        let pulse = core::RobustPulse::new(design, params_of(params)).map_err(err)?;
        Ok(PyPulse { kind: PulseKind::Robust(pulse) })
    }

    /// (omega, delta) at time t.
    fn sample(&self, t: f64) -> (f64, f64) {
        let c = self.kind.as_dyn().sample(t);
        (c.omega, c.delta)
    }

    /// Span outside which the fields are negligible, or None.
    fn natural_span(&self) -> Option<(f64, f64)> {
        self.kind.as_dyn().natural_span()
    }

    /// Transfer the unperturbed pulse is designed for (robust pulses only).
    fn target_population(&self) -> Option<f64> {
        match &self.kind {
            PulseKind::Robust(p) => Some(p.design.target_population()),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        self.kind.as_dyn().describe()
    }

    fn __repr__(&self) -> String {
        format!("Pulse({})", self.describe())
    }
}

fn resolve_span(pulse: &PyPulse, span: Option<(f64, f64)>) -> PyResult<(f64, f64)> {
    if let Some(s) = span {
        if !(s.0 < s.1) {
            return Err(PyValueError::new_err(format!(
                "span must satisfy start < end, got ({}, {})",
                s.0, s.1
            )));
        }
        return Ok(s);
    }
    pulse
        .kind
        .as_dyn()
        .natural_span()
        .ok_or_else(|| PyValueError::new_err("this pulse has no natural span; pass span=(a, b)"))
}

fn integrator(rel_tol: f64, abs_tol: f64) -> core::IntegratorConfig {
    core::IntegratorConfig { rel_tol, abs_tol, ..Default::default() }
}

/// Time-integrated drive amplitude over the span.
#[pyfunction]
#[pyo3(signature = (pulse, span=None))]
fn pulse_area(pulse: &PyPulse, span: Option<(f64, f64)>) -> PyResult<f64> {
    let span = resolve_span(pulse, span)?;
    core::pulse_area(pulse.kind.as_dyn(), span).map_err(err)
}

/// Transfer reached by accumulated drive x: tanh(x)^2.
#[pyfunction]
fn closed_form_population(half_area_integral: f64) -> f64 {
    core::closed_form_population(half_area_integral)
}

/// Final bound-level population from the ground state, with optional static
/// control errors (detuning offset delta0, relative amplitude error beta).
#[pyfunction]
#[pyo3(signature = (pulse, delta0=0.0, beta=0.0, span=None, params=None, rel_tol=1e-10, abs_tol=1e-10))]
fn final_population(
    pulse: &PyPulse,
    delta0: f64,
    beta: f64,
    span: Option<(f64, f64)>,
    params: Option<PySystemParams>,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<f64> {
    let span = resolve_span(pulse, span)?;
    let params = params_of(params);
    let cfg = integrator(rel_tol, abs_tol);
    let perturbed = core::perturb(pulse.kind.as_dyn(), core::Perturbation { delta0, beta })
        .map_err(err)?;
    core::final_population(&perturbed, &params, span, &cfg).map_err(err)
}

/// Integrate the amplitude equations from the ground state; returns a dict
/// of equal-length lists keyed t, b1_re, b1_im, b2_re, b2_im, p, pi_x, pi_y.
#[pyfunction]
#[pyo3(signature = (pulse, span=None, samples=401, delta0=0.0, beta=0.0, params=None, rel_tol=1e-10, abs_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    pulse: &PyPulse,
    span: Option<(f64, f64)>,
    samples: usize,
    delta0: f64,
    beta: f64,
    params: Option<PySystemParams>,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if samples < 2 {
        return Err(PyValueError::new_err("samples must be at least 2"));
    }
    let span = resolve_span(pulse, span)?;
    let params = params_of(params);
    let cfg = integrator(rel_tol, abs_tol);
    let times = core::linspace(span.0, span.1, samples);
    let perturbed = core::perturb(pulse.kind.as_dyn(), core::Perturbation { delta0, beta })
        .map_err(err)?;
    let traj = core::integrate_amplitude(
        &perturbed,
        &params,
        core::AmplitudeState::ground(),
        span,
        &cfg,
        &times,
    )
    .map_err(err)?;

    let n = traj.states.len();
    let mut cols: [Vec<f64>; 7] = std::array::from_fn(|_| Vec::with_capacity(n));
    for s in &traj.states {
        let b = s.to_bloch();
        cols[0].push(s.b1_re);
        cols[1].push(s.b1_im);
        cols[2].push(s.b2_re);
        cols[3].push(s.b2_im);
        cols[4].push(s.p());
        cols[5].push(b.pi_x);
        cols[6].push(b.pi_y);
    }
    let out = PyDict::new(py);
    out.set_item("t", traj.times)?;
    for (name, col) in ["b1_re", "b1_im", "b2_re", "b2_im", "p", "pi_x", "pi_y"].iter().zip(cols) {
        out.set_item(name, col)?;
    }
    Ok(out)
}

/// Final-population profile over a detuning-offset grid at beta = 0.
#[pyfunction]
#[pyo3(signature = (pulse, delta0, span=None, params=None, rel_tol=1e-10, abs_tol=1e-10))]
fn scan_1d(
    pulse: &PyPulse,
    delta0: Vec<f64>,
    span: Option<(f64, f64)>,
    params: Option<PySystemParams>,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Vec<f64>> {
    let span = resolve_span(pulse, span)?;
    core::scan_1d(pulse.kind.as_dyn(), &delta0, &params_of(params), span, &integrator(rel_tol, abs_tol))
        .map_err(err)
}

/// Fidelity map over the error plane; rows follow delta0, columns beta.
#[pyfunction]
#[pyo3(signature = (pulse, delta0, beta, span=None, params=None, rel_tol=1e-10, abs_tol=1e-10))]
fn scan_2d(
    pulse: &PyPulse,
    delta0: Vec<f64>,
    beta: Vec<f64>,
    span: Option<(f64, f64)>,
    params: Option<PySystemParams>,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let span = resolve_span(pulse, span)?;
    let result = core::scan_2d(
        pulse.kind.as_dyn(),
        &delta0,
        &beta,
        &params_of(params),
        span,
        &integrator(rel_tol, abs_tol),
    )
    .map_err(err)?;
    let m = beta.len();
    Ok(result.fidelity.chunks(m).map(<[f64]>::to_vec).collect())
}

/// Stationary points of the frozen-field reduced flow, as dicts with keys
/// p, alpha (None at the poles), kind, is_pole.
#[pyfunction]
fn fixed_points<'py>(py: Python<'py>, omega: f64, delta: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ctrl = core::ControlSample::new(omega, delta);
    core::fixed_points(ctrl)
        .into_iter()
        .map(|fp| {
            let d = PyDict::new(py);
            d.set_item("p", fp.p)?;
            d.set_item("alpha", fp.alpha)?;
            d.set_item("kind", fp.kind.as_str())?;
            d.set_item("is_pole", fp.is_pole)?;
            Ok(d)
        })
        .collect()
}

/// The level set through the target pole, as a dict with keys
/// delta_over_omega, energy, p, alpha (the last two are sample lists).
#[pyfunction]
#[pyo3(signature = (omega, delta, samples=257))]
fn separatrix<'py>(
    py: Python<'py>,
    omega: f64,
    delta: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let curve = core::separatrix(core::ControlSample::new(omega, delta), samples).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta_over_omega", curve.delta_over_omega)?;
    d.set_item("energy", curve.energy)?;
    d.set_item("p", curve.samples.iter().map(|s| s.0).collect::<Vec<f64>>())?;
    d.set_item("alpha", curve.samples.iter().map(|s| s.1).collect::<Vec<f64>>())?;
    Ok(d)
}

/// Reduced-flow energy at (p, alpha) under frozen fields.
#[pyfunction]
fn hamiltonian(p: f64, alpha: f64, omega: f64, delta: f64) -> f64 {
    core::hamiltonian(p, alpha, core::ControlSample::new(omega, delta))
}

/// Search phase-series coefficients for the best zone-averaged fidelity.
/// Returns a dict with keys best, coarse_objective, fine_objective,
/// evaluations, termination.
#[pyfunction]
#[pyo3(signature = (n=1, zone_delta0=(-0.6, 0.6), zone_beta=(0.0, 0.0), coarse=(13, 1),
                    fine=(61, 1), epsilon=0.03, t_char=1.0, budget=500, seed=20260824,
                    simplex_scale=0.5, initial=None))]
#[allow(clippy::too_many_arguments)]
fn optimize<'py>(
    py: Python<'py>,
    n: usize,
    zone_delta0: (f64, f64),
    zone_beta: (f64, f64),
    coarse: (usize, usize),
    fine: (usize, usize),
    epsilon: f64,
    t_char: f64,
    budget: usize,
    seed: u64,
    simplex_scale: f64,
    initial: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = core::OptimizeSpec {
        n,
        zone: core::Zone { delta0: zone_delta0, beta: zone_beta },
        coarse_grid: coarse,
        fine_grid: fine,
        epsilon,
        t_char,
        budget,
        seed,
        simplex_scale,
        area_penalty: None,
    };
    spec.validate().map_err(err)?;
    let initial = initial.unwrap_or_else(|| vec![0.0; n]);
    if initial.len() != n {
        return Err(PyValueError::new_err(format!(
            "initial has {} coefficients but n = {n}",
            initial.len()
        )));
    }
    let result = core::optimize(&spec, &initial).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("best", result.best)?;
    d.set_item("coarse_objective", result.best_objective)?;
    d.set_item("fine_objective", result.fine_objective)?;
    d.set_item("evaluations", result.evaluations)?;
    d.set_item(
        "termination",
        match result.termination {
            core::Termination::BudgetExhausted => "budget-exhausted",
            core::Termination::Converged => "converged",
        },
    )?;
    Ok(d)
}

#[pymodule]
fn res12_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyPulse>()?;
    m.add_function(wrap_pyfunction!(pulse_area, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_population, m)?)?;
    m.add_function(wrap_pyfunction!(final_population, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(scan_1d, m)?)?;
    m.add_function(wrap_pyfunction!(scan_2d, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(separatrix, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    Ok(())
}
