//! Adiabatic tracking controls: a sech coupling pulse with the detuning
//! slaved to it so that one elliptic fixed point carries the population from
//! p = 0 towards p = 1.
//!
//! With x = t/T the schedule is
//!   omega(t)   = omega0 sech(x),
//!   p_track(t) = 1/(1 + e^{-2x}),
//!   delta(t)   = -omega0 (1 - 3 p_track)/sqrt(1 + e^{2x}),
//! where p_track is the tracked fixed-point population on the alpha = 0
//! branch and delta inverts the fixed-point condition
//! delta = -(omega/(2 sqrt(p)))(1 - 3p) for it. The exponential forms are
//! exact identities of the sech/arctan-sinh parametrization
//! p_track = sin^2(arctan(sinh x)/2 + pi/4) and stay well conditioned for
//! all t (the naive form loses all precision for x < -37).

use crate::model::ControlSample;
use crate::pulse::Pulse;

/// Parameters of the tracking schedule: peak coupling `omega0` (units 1/T)
/// and characteristic time `t_char` (the T above).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingDesign {
    pub omega0: f64,
    pub t_char: f64,
}

impl TrackingDesign {
    pub const fn new(omega0: f64, t_char: f64) -> Self {
        Self { omega0, t_char }
    }
}

/// Fields and tracked population at time `t`.
pub fn tracking_controls(design: &TrackingDesign, t: f64) -> (ControlSample, f64) {
    let x = t / design.t_char;
    let omega = design.omega0 / x.cosh();
    // Logistic form of the tracked population; exact for all x.
    let p = 1.0 / (1.0 + (-2.0 * x).exp());
    // 1/sqrt(1 + e^{2x}) evaluated without overflow on either side.
    let inv_root = if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e * e).sqrt()
    } else {
        1.0 / (1.0 + (2.0 * x).exp()).sqrt()
    };
    let delta = -design.omega0 * (1.0 - 3.0 * p) * inv_root;
    (ControlSample::new(omega, delta), p)
}

/// Tracked fixed-point population p_track(t).
pub fn p_track(design: &TrackingDesign, t: f64) -> f64 {
    tracking_controls(design, t).1
}

/// The tracking schedule as a pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingPulse {
    pub design: TrackingDesign,
}

impl TrackingPulse {
    pub const fn new(design: TrackingDesign) -> Self {
        Self { design }
    }
}

impl Pulse for TrackingPulse {
    fn sample(&self, t: f64) -> ControlSample {
        tracking_controls(&self.design, t).0
    }

    fn describe(&self) -> String {
        format!("tracking omega0={} t_char={}", self.design.omega0, self.design.t_char)
    }

    /// The sech tail is ~7e-4 of the peak at 8 T; the area deficit of this
    /// window is below 0.1%.
    fn natural_span(&self) -> Option<(f64, f64)> {
        Some((-8.0 * self.design.t_char, 8.0 * self.design.t_char))
    }
}
