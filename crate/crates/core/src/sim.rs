//! Model-level integration: drive either chart of the model with a pulse and
//! collect a sampled trajectory, plus the closed-form transfer result used as
//! an oracle for the resonant case.

use crate::error::Error;
use crate::model::{
    amplitude_rhs, angle_rhs, AmplitudeState, AngleState, ControlSample, SystemParams,
};
use crate::ode::{solve_ivp, IntegratorConfig};
use crate::pulse::Pulse;

/// Trajectory sampled at the requested times: states and the control fields
/// that were active at each sample.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub controls: Vec<ControlSample>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl Trajectory<AmplitudeState> {
    /// Bound-level population at the last sample.
    pub fn final_p(&self) -> f64 {
        self.states.last().map(|s| s.p()).unwrap_or(0.0)
    }
}

impl Trajectory<AngleState> {
    pub fn final_p(&self) -> f64 {
        self.states.last().map(|s| s.p()).unwrap_or(0.0)
    }
}

fn controls_at(pulse: &dyn Pulse, times: &[f64]) -> Vec<ControlSample> {
    times.iter().map(|&t| pulse.sample(t)).collect()
}

/// Integrate the amplitude equations under `pulse` from `init`. Regular on
/// the whole state space, so this is the chart used for simulation runs that
/// start at or cross the poles.
pub fn integrate_amplitude(
    pulse: &dyn Pulse,
    params: &SystemParams,
    init: AmplitudeState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<Trajectory<AmplitudeState>, Error> {
    let rhs = |t: f64, y: &[f64; 4]| -> Result<[f64; 4], Error> {
        let s = AmplitudeState { b1_re: y[0], b1_im: y[1], b2_re: y[2], b2_im: y[3] };
        let d = amplitude_rhs(&s, pulse.sample(t), params);
        Ok([d.b1_re, d.b1_im, d.b2_re, d.b2_im])
    };
    let y0 = [init.b1_re, init.b1_im, init.b2_re, init.b2_im];
    let sol = solve_ivp(rhs, t_span, y0, cfg, sample_times)?;
    Ok(Trajectory {
        times: sol.times,
        states: sol
            .states
            .iter()
            .map(|y| AmplitudeState { b1_re: y[0], b1_im: y[1], b2_re: y[2], b2_im: y[3] })
            .collect(),
        controls: controls_at(pulse, sample_times),
    })
}

/// Integrate the angle-chart equations. Phases evolve unwrapped; fails with a
/// chart-singularity error if the trajectory approaches a pole.
pub fn integrate_angle(
    pulse: &dyn Pulse,
    params: &SystemParams,
    init: AngleState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<Trajectory<AngleState>, Error> {
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3], Error> {
        let s = AngleState { theta: y[0], alpha: y[1], gamma: y[2] };
        let d = angle_rhs(&s, pulse.sample(t), params, t)?;
        Ok([d.theta, d.alpha, d.gamma])
    };
    let y0 = [init.theta, init.alpha, init.gamma];
    let sol = solve_ivp(rhs, t_span, y0, cfg, sample_times)?;
    Ok(Trajectory {
        times: sol.times,
        states: sol
            .states
            .iter()
            .map(|y| AngleState { theta: y[0], alpha: y[1], gamma: y[2] })
            .collect(),
        controls: controls_at(pulse, sample_times),
    })
}

/// Transfer reached by accumulated drive: p = tanh^2(x), where
/// x = integral of (omega/2) sin(alpha) dt plus the artanh(sin(theta0/2))
/// offset of the start. On resonance (alpha locked at pi/2) with a start at
/// the north pole, x is half the pulse area.
///
/// Derivation: substituting u = artanh(sqrt(p)) into
/// dp/dt = omega (1-p) sqrt(p) sin(alpha) gives du/dt = (omega/2) sin(alpha).
pub fn closed_form_population(half_area_integral: f64) -> f64 {
    let t = half_area_integral.tanh();
    t * t
}
