//! Embedded Runge-Kutta 5(4) solver (Dormand-Prince pair) with PI step-size
//! control and a 4th-order dense-output interpolant, plus adaptive Simpson
//! quadrature. Generic over the state dimension; all arithmetic is plain
//! sequential f64, so runs are bitwise reproducible.

use crate::error::Error;

/// Tolerances and step limits for the adaptive solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// First trial step; `None` selects one automatically.
    pub initial_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-10, max_step: 0.5, initial_step: None }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidConfig(format!("max_step must be positive ({})", self.max_step)));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig(format!("initial_step must be positive ({h})")));
            }
        }
        Ok(())
    }
}

/// States sampled at the requested times, plus step statistics.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th-order weights and the embedded 4th-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Weights of the quartic dense-output polynomial.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04; // PI stabilization exponent
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct DenseStep<const N: usize> {
    c: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn build(y0: &[f64; N], y1: &[f64; N], h: f64, k: &[[f64; N]; 7]) -> Self {
        let mut c = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y1[i] - y0[i];
            let bspl = h * k[0][i] - ydiff;
            c[0][i] = y0[i];
            c[1][i] = ydiff;
            c[2][i] = bspl;
            c[3][i] = ydiff - h * k[6][i] - bspl;
            c[4][i] = h * (D[0] * k[0][i] + D[2] * k[2][i] + D[3] * k[3][i] + D[4] * k[4][i]
                + D[5] * k[5][i]
                + D[6] * k[6][i]);
        }
        Self { c }
    }

    fn eval(&self, theta: f64) -> [f64; N] {
        let th1 = 1.0 - theta;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.c[0][i]
                + theta
                    * (self.c[1][i]
                        + th1 * (self.c[2][i] + theta * (self.c[3][i] + th1 * self.c[4][i])));
        }
        y
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

/// Automatic first-step heuristic based on the scaled sizes of the state,
/// the derivative, and an Euler-probe second derivative.
fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, Error>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], Error>,
{
    let sc: Vec<f64> = (0..N).map(|i| cfg.abs_tol + cfg.rel_tol * y0[i].abs()).collect();
    let rms = |v: &[f64; N]| -> f64 {
        let s: f64 = (0..N).map(|i| (v[i] / sc[i]).powi(2)).sum();
        (s / N as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] += dir * h0 * f0[i];
    }
    let f1 = rhs(t0 + dir * h0, &y1)?;
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms(&diff) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
    Ok(h1.min(100.0 * h0).min(cfg.max_step))
}

/// Integrate `dy/dt = rhs(t, y)` over `t_span`, producing the solution at
/// `sample_times` via dense output. Sample times must be non-decreasing and
/// lie inside the span (which may run backwards in time).
pub fn solve_ivp<const N: usize, F>(
    mut rhs: F,
    t_span: (f64, f64),
    y0: [f64; N],
    cfg: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<OdeSolution<N>, Error>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], Error>,
{
    cfg.validate()?;
    let (t0, tf) = t_span;
    if !(tf - t0).is_finite() || tf == t0 {
        return Err(Error::InvalidConfig(format!("degenerate t_span [{t0}, {tf}]")));
    }
    let dir = (tf - t0).signum();
    let span = (tf - t0).abs();
    let lo = t0.min(tf) - 1e-9 * span;
    let hi = t0.max(tf) + 1e-9 * span;
    for w in sample_times.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            return Err(Error::InvalidConfig("sample times must follow the span direction".into()));
        }
    }
    for &t in sample_times {
        if t < lo || t > hi {
            return Err(Error::SampleOutOfSpan { t, t0, t1: tf });
        }
    }

    let mut out = OdeSolution {
        times: sample_times.to_vec(),
        states: Vec::with_capacity(sample_times.len()),
        steps_accepted: 0,
        steps_rejected: 0,
    };
    let mut next_sample = 0;
    // Samples at (or numerically before) the start come straight from y0.
    while next_sample < sample_times.len() && (sample_times[next_sample] - t0) * dir <= 0.0 {
        out.states.push(y0);
        next_sample += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    let mut h = match cfg.initial_step {
        Some(h) => h.min(cfg.max_step).min(span),
        None => initial_step(&mut rhs, t0, &y0, &k1, dir, cfg)?.min(span),
    };
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let expo1 = 0.2 - BETA * 0.75;
    let h_floor = (span * 1e-15).max(f64::MIN_POSITIVE * 1e4);

    while (tf - t) * dir > 1e-14 * span {
        if h < h_floor {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if h >= (tf - t) * dir {
            h = (tf - t) * dir;
            last = true;
        }
        let hs = dir * h;

        // Stages (first-same-as-last: k1 carried over from the last step).
        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s - 1][j] * kj[i];
                }
                ys[i] += hs * acc;
            }
            k[s] = rhs(t + C[s] * hs, &ys)?;
        }
        // k[6] was evaluated at the 5th-order solution (A row 6 = b weights).
        let mut y1 = y;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[5][j] * kj[i];
            }
            y1[i] += hs * acc;
        }
        let mut err_vec = [0.0; N];
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += E[j] * kj[i];
            }
            err_vec[i] = hs * acc;
        }
        let err = error_norm(&err_vec, &y, &y1, cfg);

        if !err.is_finite() {
            out.steps_rejected += 1;
            rejected_last = true;
            h *= 0.1;
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // Accept; emit dense output for samples inside this step.
            let t_new = if last { tf } else { t + hs };
            if next_sample < sample_times.len() {
                let mut dense: Option<DenseStep<N>> = None;
                while next_sample < sample_times.len()
                    && (sample_times[next_sample] - t_new) * dir <= 1e-14 * span
                {
                    let ts = sample_times[next_sample];
                    if (ts - t_new) * dir >= 0.0 {
                        out.states.push(y1);
                    } else {
                        let d = dense.get_or_insert_with(|| DenseStep::build(&y, &y1, hs, &k));
                        let theta = ((ts - t) / hs).clamp(0.0, 1.0);
                        out.states.push(d.eval(theta));
                    }
                    next_sample += 1;
                }
            }
            out.steps_accepted += 1;
            let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            facold = err.max(1e-4);
            t = t_new;
            y = y1;
            k1 = k[6];
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            h = h_new.min(cfg.max_step);
        } else {
            out.steps_rejected += 1;
            rejected_last = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }

    // Remaining samples sit at the end point within rounding.
    while next_sample < sample_times.len() {
        out.states.push(y);
        next_sample += 1;
    }
    Ok(out)
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect()
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol` (error estimate via Richardson comparison of nested panels).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, Error> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, Error> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureDepth { a, b });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64; 1]) -> Result<[f64; 1], Error> {
        Ok([-y[0]])
    }

    #[test]
    fn exponential_decay_hits_solver_tolerance() {
        let cfg = IntegratorConfig::default();
        let samples = linspace(0.0, 1.0, 11);
        let sol = solve_ivp(decay, (0.0, 1.0), [1.0], &cfg, &samples).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let exact = (-t).exp();
            assert!((y[0] - exact).abs() < 5e-11, "t={t} err={}", (y[0] - exact).abs());
        }
        assert!(sol.steps_accepted > 2);
    }

    #[test]
    fn dense_output_between_steps_is_accurate() {
        // Large max_step so most samples fall strictly inside steps.
        let cfg = IntegratorConfig { max_step: 10.0, ..Default::default() };
        let samples = linspace(0.0, 5.0, 101);
        let sol = solve_ivp(decay, (0.0, 5.0), [1.0], &cfg, &samples).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - (-t).exp()).abs() < 2e-10);
        }
    }

    #[test]
    fn harmonic_oscillator_energy_and_phase() {
        let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-12, ..Default::default() };
        let rhs = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2], Error> { Ok([y[1], -y[0]]) };
        let tf = 20.0 * std::f64::consts::PI;
        let sol = solve_ivp(rhs, (0.0, tf), [1.0, 0.0], &cfg, &[tf]).unwrap();
        let y = sol.states[0];
        assert!((y[0] - 1.0).abs() < 1e-8, "cos err {}", (y[0] - 1.0).abs());
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_integration_works() {
        let cfg = IntegratorConfig::default();
        let sol = solve_ivp(decay, (1.0, 0.0), [1.0f64.exp().recip()], &cfg, &[0.5, 0.0]).unwrap();
        assert!((sol.states[0][0] - (-0.5f64).exp()).abs() < 1e-10);
        assert!((sol.states[1][0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tolerance_ladder_is_monotone() {
        let mut errs = Vec::new();
        for tol in [1e-4, 1e-7, 1e-10] {
            let cfg = IntegratorConfig { rel_tol: tol, abs_tol: tol, ..Default::default() };
            let sol = solve_ivp(decay, (0.0, 2.0), [1.0], &cfg, &[2.0]).unwrap();
            errs.push((sol.states[0][0] - (-2.0f64).exp()).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "ladder {errs:?}");
    }

    #[test]
    fn rejects_bad_config_and_samples() {
        let cfg = IntegratorConfig { rel_tol: -1.0, ..Default::default() };
        assert!(matches!(
            solve_ivp(decay, (0.0, 1.0), [1.0], &cfg, &[]),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            solve_ivp(decay, (0.0, 1.0), [1.0], &cfg, &[2.0]),
            Err(Error::SampleOutOfSpan { .. })
        ));
    }

    #[test]
    fn rhs_errors_propagate() {
        let cfg = IntegratorConfig::default();
        let rhs = |t: f64, y: &[f64; 1]| -> Result<[f64; 1], Error> {
            if t > 0.5 {
                Err(Error::ChartSingularity { t, sin_half_theta: 0.0 })
            } else {
                Ok([-y[0]])
            }
        };
        assert!(matches!(
            solve_ivp(rhs, (0.0, 1.0), [1.0], &cfg, &[1.0]),
            Err(Error::ChartSingularity { .. })
        ));
    }

    #[test]
    fn bitwise_deterministic() {
        let cfg = IntegratorConfig::default();
        let samples = linspace(0.0, 3.0, 7);
        let a = solve_ivp(decay, (0.0, 3.0), [1.0], &cfg, &samples).unwrap();
        let b = solve_ivp(decay, (0.0, 3.0), [1.0], &cfg, &samples).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn simpson_matches_known_integrals() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-12).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        assert_eq!(adaptive_simpson(&|_| 1.0, 2.0, 2.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn linspace_endpoints_exact() {
        let v = linspace(-0.6, 0.6, 61);
        assert_eq!(v.len(), 61);
        assert_eq!(v[0], -0.6);
        assert_eq!(v[60], 0.6);
        assert!((v[30]).abs() < 1e-15);
    }
}
