//! Control pulses: time-dependent (omega, delta) field pairs fed to the
//! integrator, and the pulse-area quadrature.

use crate::error::Error;
use crate::model::ControlSample;
use crate::ode::adaptive_simpson;

/// A control schedule. Implementations must be pure functions of `t` so that
/// scans can share one instance across threads.
pub trait Pulse: Sync {
    fn sample(&self, t: f64) -> ControlSample;

    /// Short human-readable identity used in output metadata.
    fn describe(&self) -> String;

    /// Span outside which the fields are negligible, when one exists.
    fn natural_span(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Fields held constant; no natural span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPulse {
    pub omega: f64,
    pub delta: f64,
}

impl Pulse for ConstantPulse {
    fn sample(&self, _t: f64) -> ControlSample {
        ControlSample::new(self.omega, self.delta)
    }

    fn describe(&self) -> String {
        format!("constant omega={} delta={}", self.omega, self.delta)
    }
}

/// Integral of omega(t) over `t_span` by adaptive Simpson quadrature
/// (absolute tolerance 1e-10).
pub fn pulse_area(pulse: &dyn Pulse, t_span: (f64, f64)) -> Result<f64, Error> {
    adaptive_simpson(&|t| pulse.sample(t).omega, t_span.0, t_span.1, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_pulse_area_is_omega_times_length() {
        let p = ConstantPulse { omega: 2.5, delta: 0.3 };
        let a = pulse_area(&p, (0.0, 4.0)).unwrap();
        assert!((a - 10.0).abs() < 1e-12);
        assert_eq!(p.sample(1.0), ControlSample::new(2.5, 0.3));
        assert!(p.natural_span().is_none());
    }
}
