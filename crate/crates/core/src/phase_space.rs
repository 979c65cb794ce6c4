//! Frozen-field phase-space analysis of the reduced (p, alpha) flow:
//! effective Hamiltonian, fixed-point census with stability, the separatrix
//! attached to the target pole, and portrait assembly for plotting.
//!
//! The reduced flow (nonlinear shifts set to zero) is
//!   dp/dt     = omega (1-p) sqrt(p) sin(alpha),
//!   dalpha/dt = (omega/2) cos(alpha) (1-3p)/sqrt(p) + delta,
//! which is Hamiltonian for h(p, alpha) with the canonical pair (p/2, alpha).

use crate::error::Error;
use crate::model::{BlochVector, ControlSample};
use crate::ode::{linspace, solve_ivp, IntegratorConfig};

/// Energy h = -delta/3 + delta p/2 + (omega/2)(1-p) sqrt(p) cos(alpha).
pub fn hamiltonian(p: f64, alpha: f64, ctrl: ControlSample) -> f64 {
    -ctrl.delta / 3.0
        + 0.5 * ctrl.delta * p
        + 0.5 * ctrl.omega * (1.0 - p) * p.sqrt() * alpha.cos()
}

/// Rates (dp/dt, dalpha/dt) of the reduced frozen-field flow.
pub fn reduced_rhs(p: f64, alpha: f64, ctrl: ControlSample) -> (f64, f64) {
    let sp = p.sqrt();
    let (sa, ca) = alpha.sin_cos();
    (
        ctrl.omega * (1.0 - p) * sp * sa,
        0.5 * ctrl.omega * ca * (1.0 - 3.0 * p) / sp + ctrl.delta,
    )
}

/// Jacobian of the reduced flow at (p, alpha), rows (dp/dt, dalpha/dt).
pub fn jacobian(p: f64, alpha: f64, ctrl: ControlSample) -> [[f64; 2]; 2] {
    let sp = p.sqrt();
    let (sa, ca) = alpha.sin_cos();
    [
        [
            0.5 * ctrl.omega * sa * (1.0 - 3.0 * p) / sp,
            ctrl.omega * (1.0 - p) * sp * ca,
        ],
        [
            -0.25 * ctrl.omega * ca * (3.0 * p + 1.0) / (p * sp),
            -0.5 * ctrl.omega * sa * (1.0 - 3.0 * p) / sp,
        ],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Elliptic,
    Hyperbolic,
    /// Boundary case |delta/omega| = 1 where the pole changes character.
    Degenerate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Elliptic => "elliptic",
            Stability::Hyperbolic => "hyperbolic",
            Stability::Degenerate => "degenerate",
        }
    }
}

/// Stationary point of the reduced flow. `alpha` is `None` at the chart
/// poles p = 0 and p = 1, where the relative phase is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub p: f64,
    pub alpha: Option<f64>,
    pub kind: Stability,
    pub is_pole: bool,
}

/// Classify a 2x2 Jacobian by its eigenvalue pair: a purely imaginary pair
/// (real part below 1e-9) is elliptic, a real pair hyperbolic.
fn classify_jacobian(j: [[f64; 2]; 2]) -> Stability {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        if (0.5 * tr).abs() < 1e-9 {
            Stability::Elliptic
        } else {
            Stability::Degenerate
        }
    } else if disc > 0.0 {
        Stability::Hyperbolic
    } else {
        Stability::Degenerate
    }
}

/// Character of the target pole p = 1: hyperbolic for |delta/omega| < 1,
/// elliptic for |delta/omega| > 1, degenerate on the boundary. The angle
/// chart is singular there, so the Jacobian route does not apply.
pub fn classify_target(ctrl: ControlSample) -> Result<Stability, Error> {
    if !(ctrl.omega > 0.0) {
        return Err(Error::ZeroOmegaTarget);
    }
    let ratio = (ctrl.delta / ctrl.omega).abs();
    Ok(if ratio < 1.0 {
        Stability::Hyperbolic
    } else if ratio > 1.0 {
        Stability::Elliptic
    } else {
        Stability::Degenerate
    })
}

/// All fixed points of the frozen flow, ordered: interior point on the
/// alpha = 0 branch (if present), interior point on the alpha = pi branch
/// (if present), then the pole(s).
///
/// Interior points solve delta = -cos(alpha) (omega/2) (1-3p)/sqrt(p) with
/// alpha in {0, pi}; the branch exists for delta/omega < 1 (alpha = 0)
/// respectively delta/omega > -1 (alpha = pi). With omega = 0 only the two
/// poles remain, both elliptic. With omega > 0 the pole p = 0 is not a fixed
/// point (the drive moves population out of it) and is omitted.
pub fn fixed_points(ctrl: ControlSample) -> Vec<FixedPoint> {
    let mut out = Vec::new();
    if ctrl.omega == 0.0 {
        out.push(FixedPoint { p: 0.0, alpha: None, kind: Stability::Elliptic, is_pole: true });
        out.push(FixedPoint { p: 1.0, alpha: None, kind: Stability::Elliptic, is_pole: true });
        return out;
    }
    let hyp = f64::hypot(ctrl.delta, 3.0f64.sqrt() * ctrl.omega);
    for (sign, alpha) in [(1.0, 0.0), (-1.0, std::f64::consts::PI)] {
        let u = (sign * ctrl.delta + hyp) / (3.0 * ctrl.omega);
        if u > 0.0 && u < 1.0 {
            let p = u * u;
            out.push(FixedPoint {
                p,
                alpha: Some(alpha),
                kind: classify_jacobian(jacobian(p, alpha, ctrl)),
                is_pole: false,
            });
        }
    }
    out.push(FixedPoint {
        p: 1.0,
        alpha: None,
        kind: classify_target(ctrl).expect("omega > 0 here"),
        is_pole: true,
    });
    out
}

/// The level set h = delta/6 through the target pole, given in closed form
/// by sqrt(p) cos(alpha) = delta/omega with p in [(delta/omega)^2, 1].
#[derive(Debug, Clone)]
pub struct SeparatrixCurve {
    pub delta_over_omega: f64,
    /// Energy of the curve, delta/6.
    pub energy: f64,
    /// Ordered (p, alpha) samples from the pole along one phase branch to the
    /// lowest-p point and back to the pole along the mirror branch. Alpha is
    /// kept continuous (it may leave (-pi, pi] when the curve crosses pi).
    pub samples: Vec<(f64, f64)>,
}

fn bloch_of(p: f64, alpha: f64) -> BlochVector {
    let r = 2.0 * std::f64::consts::SQRT_2 * (1.0 - p) * p.sqrt();
    BlochVector { pi_x: r * alpha.cos(), pi_y: r * alpha.sin(), p }
}

impl SeparatrixCurve {
    pub fn bloch_samples(&self) -> Vec<BlochVector> {
        self.samples.iter().map(|&(p, a)| bloch_of(p, a)).collect()
    }

    /// Polyline length of the curve embedded in (pi_x, pi_y, p) space.
    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.samples)
    }
}

fn polyline_length(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let a = bloch_of(w[0].0, w[0].1);
            let b = bloch_of(w[1].0, w[1].1);
            let (dx, dy, dp) = (b.pi_x - a.pi_x, b.pi_y - a.pi_y, b.p - a.p);
            (dx * dx + dy * dy + dp * dp).sqrt()
        })
        .sum()
}

/// Resample a parametrized curve to `n` points at equal arc length in the
/// embedding space. `point` maps the parameter to exact (p, alpha).
fn arc_length_resample(
    point: &dyn Fn(f64) -> (f64, f64),
    s_range: (f64, f64),
    n_dense: usize,
    n: usize,
) -> Vec<(f64, f64)> {
    let params = linspace(s_range.0, s_range.1, n_dense);
    let dense: Vec<(f64, f64)> = params.iter().map(|&s| point(s)).collect();
    let mut cum = Vec::with_capacity(n_dense);
    cum.push(0.0);
    for w in dense.windows(2) {
        let a = bloch_of(w[0].0, w[0].1);
        let b = bloch_of(w[1].0, w[1].1);
        let (dx, dy, dp) = (b.pi_x - a.pi_x, b.pi_y - a.pi_y, b.p - a.p);
        cum.push(cum.last().unwrap() + (dx * dx + dy * dy + dp * dp).sqrt());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let (c0, c1) = (cum[seg], cum[seg + 1]);
        let frac = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
        let s = params[seg] + frac * (params[seg + 1] - params[seg]);
        out.push(point(s));
    }
    out
}

/// Compute the separatrix for the given frozen fields with `n_samples`
/// points (arc-length spaced). Requires omega > 0 and |delta/omega| < 1;
/// otherwise the pole is not hyperbolic and no separatrix exists.
pub fn separatrix(ctrl: ControlSample, n_samples: usize) -> Result<SeparatrixCurve, Error> {
    if !(ctrl.omega > 0.0) {
        return Err(Error::NoSeparatrix { ratio: f64::INFINITY });
    }
    let d = ctrl.delta / ctrl.omega;
    if !(d.abs() < 1.0) {
        return Err(Error::NoSeparatrix { ratio: d.abs() });
    }
    let n = n_samples.max(5);
    let n_dense = 8 * n;
    let samples = if d == 0.0 {
        // Degenerate case: two vertical branches alpha = +-pi/2, p in [0, 1].
        let point = |s: f64| -> (f64, f64) {
            if s <= 1.0 {
                (1.0 - s, std::f64::consts::FRAC_PI_2)
            } else {
                (s - 1.0, -std::f64::consts::FRAC_PI_2)
            }
        };
        arc_length_resample(&point, (0.0, 2.0), n_dense, n)
    } else {
        // Branch from the pole at alpha0 = arccos(d) down to the bottom point
        // (p = d^2) and back along the mirror branch; alpha stays continuous.
        let alpha0 = d.acos();
        let (lo, hi) = if d > 0.0 {
            (-alpha0, alpha0) // bottom at alpha = 0
        } else {
            (alpha0, 2.0 * std::f64::consts::PI - alpha0) // bottom at alpha = pi
        };
        let d2 = d * d;
        let point = |s: f64| -> (f64, f64) {
            let c = s.cos();
            let p = (d2 / (c * c)).min(1.0);
            (p, s)
        };
        arc_length_resample(&point, (lo, hi), n_dense, n)
    };
    Ok(SeparatrixCurve { delta_over_omega: d, energy: ctrl.delta / 6.0, samples })
}

/// A closed frozen-field orbit sampled by integrating the reduced flow; its
/// samples all lie on one level set of h.
#[derive(Debug, Clone)]
pub struct Contour {
    pub energy: f64,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct PortraitOptions {
    pub separatrix_samples: usize,
    /// Number of seed orbits traced as constant-energy contours (0 disables).
    pub n_contours: usize,
    pub contour_samples: usize,
}

impl Default for PortraitOptions {
    fn default() -> Self {
        Self { separatrix_samples: 257, n_contours: 8, contour_samples: 257 }
    }
}

/// Phase portrait bundle for one frozen control sample.
#[derive(Debug, Clone)]
pub struct Portrait {
    pub ctrl: ControlSample,
    pub fixed_points: Vec<FixedPoint>,
    pub separatrix: Option<SeparatrixCurve>,
    pub contours: Vec<Contour>,
}

/// Assemble fixed points, the separatrix when it exists, and a family of
/// constant-energy contours seeded across the population range.
pub fn portrait(ctrl: ControlSample, opts: &PortraitOptions) -> Result<Portrait, Error> {
    let fps = fixed_points(ctrl);
    let sep = if ctrl.omega > 0.0 && (ctrl.delta / ctrl.omega).abs() < 1.0 {
        Some(separatrix(ctrl, opts.separatrix_samples)?)
    } else {
        None
    };

    let mut contours = Vec::new();
    if opts.n_contours > 0 {
        let seeds_p = linspace(0.12, 0.92, opts.n_contours.div_ceil(2));
        let mut seeds = Vec::new();
        for &p0 in &seeds_p {
            seeds.push((p0, 0.0));
            if seeds.len() < opts.n_contours {
                seeds.push((p0, std::f64::consts::PI));
            }
        }
        seeds.truncate(opts.n_contours);
        for (p0, a0) in seeds {
            let energy = hamiltonian(p0, a0, ctrl);
            if ctrl.omega == 0.0 {
                // Orbits are horizontal lines traversed at rate delta.
                let alphas = linspace(-std::f64::consts::PI, std::f64::consts::PI, opts.contour_samples);
                contours.push(Contour { energy, samples: alphas.iter().map(|&a| (p0, a)).collect() });
                continue;
            }
            // Several turns of the orbit; the energy is conserved, so every
            // sample stays on the level set regardless of the duration.
            let omega_ref = ctrl.omega.max(ctrl.delta.abs()).max(0.5);
            let duration = 24.0 / omega_ref;
            let rhs = |_t: f64, y: &[f64; 2]| -> Result<[f64; 2], Error> {
                let (dp, da) = reduced_rhs(y[0], y[1], ctrl);
                Ok([dp, da])
            };
            let cfg = IntegratorConfig { rel_tol: 1e-9, abs_tol: 1e-9, ..Default::default() };
            let times = linspace(0.0, duration, opts.contour_samples);
            let sol = solve_ivp(rhs, (0.0, duration), [p0, a0], &cfg, &times)?;
            contours.push(Contour {
                energy,
                samples: sol.states.iter().map(|y| (y[0], y[1])).collect(),
            });
        }
    }
    Ok(Portrait { ctrl, fixed_points: fps, separatrix: sep, contours })
}
