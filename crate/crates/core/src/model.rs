//! Two-level model with a (1:2) nonlinear resonance between a paired level
//! `b1` and a bound level `b2`, conserving |b1|^2 + 2|b2|^2 = 1.
//!
//! Three charts of the same state are used: complex amplitudes (regular
//! everywhere, used for simulation), angles (theta, alpha, gamma) (used for
//! design and analysis, singular at the poles), and the reduced Bloch-like
//! coordinates (Pi_x, Pi_y, p) living on the surface
//! Pi_x^2 + Pi_y^2 = 8 (1-p)^2 p.

use crate::error::Error;

/// Angle-chart guard: below this value of sin(theta/2) the chart is treated
/// as singular and `angle_rhs` refuses to evaluate.
pub const SIN_HALF_THETA_MIN: f64 = 1e-12;

/// Instantaneous control fields: coupling amplitude `omega` >= 0 and
/// detuning `delta`, both in units of 1/T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub omega: f64,
    pub delta: f64,
}

impl ControlSample {
    pub const fn new(omega: f64, delta: f64) -> Self {
        Self { omega, delta }
    }
}

/// Static nonlinear shifts; both default to zero and the phase-space
/// analysis assumes they vanish.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SystemParams {
    pub lambda_a: f64,
    pub lambda_s: f64,
}

impl SystemParams {
    /// Combined shifted detuning D = delta - lambda_a + lambda_s * p.
    #[inline]
    fn shifted_detuning(&self, delta: f64, p: f64) -> f64 {
        delta - self.lambda_a + self.lambda_s * p
    }
}

/// Complex amplitudes split into real pairs; `b1` is the paired-level
/// amplitude, `b2` the bound-level amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeState {
    pub b1_re: f64,
    pub b1_im: f64,
    pub b2_re: f64,
    pub b2_im: f64,
}

/// Angle chart: polar angle `theta` in [0, pi], relative phase `alpha`,
/// global phase `gamma`. Phases are kept unwrapped during integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleState {
    pub theta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Point of the reduced state space; on-shell states satisfy
/// pi_x^2 + pi_y^2 = 8 (1-p)^2 p with p = 2|b2|^2 in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub pi_x: f64,
    pub pi_y: f64,
    pub p: f64,
}

impl AmplitudeState {
    /// All population in the paired level (theta = 0).
    pub const fn ground() -> Self {
        Self { b1_re: 1.0, b1_im: 0.0, b2_re: 0.0, b2_im: 0.0 }
    }

    /// Conserved norm |b1|^2 + 2|b2|^2 (equals 1 on-shell).
    #[inline]
    pub fn norm(&self) -> f64 {
        self.b1_re * self.b1_re
            + self.b1_im * self.b1_im
            + 2.0 * (self.b2_re * self.b2_re + self.b2_im * self.b2_im)
    }

    /// Bound-level population p = 2|b2|^2.
    #[inline]
    pub fn p(&self) -> f64 {
        2.0 * (self.b2_re * self.b2_re + self.b2_im * self.b2_im)
    }

    /// Reduced coordinates. The state is renormalized first so that the
    /// emitted point sits on the surface to machine precision even when the
    /// input carries a small norm drift.
    pub fn to_bloch(&self) -> BlochVector {
        let n = self.norm();
        let s = if n > 0.0 { 1.0 / n.sqrt() } else { 0.0 };
        let (x1, y1) = (self.b1_re * s, self.b1_im * s);
        let (x2, y2) = (self.b2_re * s, self.b2_im * s);
        // z = b1^2 * conj(b2); Pi_x = 4 Re z, Pi_y = 4 Im z.
        let (u, v) = (x1 * x1 - y1 * y1, 2.0 * x1 * y1);
        BlochVector {
            pi_x: 4.0 * (u * x2 + v * y2),
            pi_y: 4.0 * (v * x2 - u * y2),
            p: 2.0 * (x2 * x2 + y2 * y2),
        }
    }

    /// Angle chart of the (renormalized) state. At the poles the relative
    /// phase is undefined and is returned as 0; gamma likewise at theta = pi.
    pub fn to_angles(&self) -> AngleState {
        let n = self.norm().sqrt();
        let r1 = (self.b1_re * self.b1_re + self.b1_im * self.b1_im).sqrt() / n;
        let r2 = (self.b2_re * self.b2_re + self.b2_im * self.b2_im).sqrt() / n;
        let theta = 2.0 * f64::atan2(std::f64::consts::SQRT_2 * r2, r1);
        let gamma = if r1 > 0.0 { -f64::atan2(self.b1_im, self.b1_re) } else { 0.0 };
        let alpha = if r2 > 0.0 {
            -f64::atan2(self.b2_im, self.b2_re) - 2.0 * gamma
        } else {
            0.0
        };
        AngleState { theta, alpha, gamma }
    }
}

impl AngleState {
    /// Bound-level population p = sin^2(theta/2).
    #[inline]
    pub fn p(&self) -> f64 {
        let s = (0.5 * self.theta).sin();
        s * s
    }

    /// Amplitude chart: b1 = cos(theta/2) e^{-i gamma},
    /// b2 = sin(theta/2)/sqrt(2) e^{-i(alpha + 2 gamma)}.
    pub fn to_amplitudes(&self) -> AmplitudeState {
        let (s, c) = (0.5 * self.theta).sin_cos();
        let r2 = s / std::f64::consts::SQRT_2;
        let ph1 = -self.gamma;
        let ph2 = -(self.alpha + 2.0 * self.gamma);
        AmplitudeState {
            b1_re: c * ph1.cos(),
            b1_im: c * ph1.sin(),
            b2_re: r2 * ph2.cos(),
            b2_im: r2 * ph2.sin(),
        }
    }

    pub fn to_bloch(&self) -> BlochVector {
        let p = self.p();
        let r = 2.0 * std::f64::consts::SQRT_2 * (1.0 - p) * p.sqrt();
        BlochVector { pi_x: r * self.alpha.cos(), pi_y: r * self.alpha.sin(), p }
    }
}

impl BlochVector {
    /// Signed distance from the reduced surface, pi_x^2 + pi_y^2 - 8(1-p)^2 p.
    pub fn sphere_residual(&self) -> f64 {
        self.pi_x * self.pi_x + self.pi_y * self.pi_y
            - 8.0 * (1.0 - self.p) * (1.0 - self.p) * self.p
    }
}

/// Time derivative of the amplitudes:
///   i db1/dt = -(1/3) D b1 + (omega/sqrt(2)) conj(b1) b2,
///   i db2/dt = +(1/3) D b2 + (omega/(2 sqrt(2))) b1^2,
/// with D = delta - lambda_a + 2 lambda_s |b2|^2. The returned struct holds
/// d/dt of each component.
pub fn amplitude_rhs(
    state: &AmplitudeState,
    ctrl: ControlSample,
    params: &SystemParams,
) -> AmplitudeState {
    let AmplitudeState { b1_re: x1, b1_im: y1, b2_re: x2, b2_im: y2 } = *state;
    let d3 = params.shifted_detuning(ctrl.delta, 2.0 * (x2 * x2 + y2 * y2)) / 3.0;
    let w = ctrl.omega / std::f64::consts::SQRT_2;
    AmplitudeState {
        b1_re: -d3 * y1 + w * (x1 * y2 - y1 * x2),
        b1_im: d3 * x1 - w * (x1 * x2 + y1 * y2),
        b2_re: d3 * y2 + w * x1 * y1,
        b2_im: -d3 * x2 - 0.5 * w * (x1 * x1 - y1 * y1),
    }
}

/// Time derivative in the angle chart:
///   dtheta/dt = omega sin(alpha) cos(theta/2),
///   dalpha/dt = (omega/2) cos(alpha) (1 - 3 sin^2(theta/2))/sin(theta/2) + D,
///   dgamma/dt = (omega/2) cos(alpha) sin(theta/2) - D/3,
/// with D = delta - lambda_a + lambda_s sin^2(theta/2). Fails near the poles
/// where the chart degenerates; `t` is only used to label the error.
pub fn angle_rhs(
    state: &AngleState,
    ctrl: ControlSample,
    params: &SystemParams,
    t: f64,
) -> Result<AngleState, Error> {
    let (s, c) = (0.5 * state.theta).sin_cos();
    if s.abs() < SIN_HALF_THETA_MIN {
        return Err(Error::ChartSingularity { t, sin_half_theta: s });
    }
    let (sa, ca) = state.alpha.sin_cos();
    let d = params.shifted_detuning(ctrl.delta, s * s);
    let half_om_ca = 0.5 * ctrl.omega * ca;
    Ok(AngleState {
        theta: ctrl.omega * sa * c,
        alpha: half_om_ca * (1.0 - 3.0 * s * s) / s + d,
        gamma: half_om_ca * s - d / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const P0: SystemParams = SystemParams { lambda_a: 0.0, lambda_s: 0.0 };

    #[test]
    fn ground_state_drive_feeds_bound_level_only() {
        let d = amplitude_rhs(&AmplitudeState::ground(), ControlSample::new(1.0, 0.0), &P0);
        assert_eq!(d.b1_re, 0.0);
        assert_eq!(d.b1_im, 0.0);
        assert_eq!(d.b2_re, 0.0);
        // db2/dt = -i / (2 sqrt(2))
        assert!((d.b2_im + 0.35355339059327373).abs() < 1e-15);
    }

    #[test]
    fn angle_rhs_matches_hand_value_on_equator() {
        let s = AngleState { theta: FRAC_PI_2, alpha: FRAC_PI_2, gamma: 0.0 };
        let d = angle_rhs(&s, ControlSample::new(1.0, 0.0), &P0, 0.0).unwrap();
        // dtheta/dt = cos(pi/4) = 1/sqrt(2); the cos(alpha) terms vanish.
        assert!((d.theta - 0.7071067811865475).abs() < 1e-15);
        assert!(d.alpha.abs() < 1e-15);
        assert!(d.gamma.abs() < 1e-15);
    }

    #[test]
    fn angle_rhs_rejects_pole() {
        let s = AngleState { theta: 1e-13, alpha: 0.0, gamma: 0.0 };
        let err = angle_rhs(&s, ControlSample::new(1.0, 0.0), &P0, 2.5).unwrap_err();
        match err {
            Error::ChartSingularity { t, .. } => assert_eq!(t, 2.5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lambda_terms_enter_with_bound_population() {
        // At p = 1/2 the amplitude-form shift uses 2 lambda_s |b2|^2 = lambda_s p.
        let st = AngleState { theta: FRAC_PI_2, alpha: 0.3, gamma: 0.0 }.to_amplitudes();
        let params = SystemParams { lambda_a: 0.7, lambda_s: 1.3 };
        let ctrl = ControlSample::new(0.0, 2.0);
        let d = amplitude_rhs(&st, ctrl, &params);
        // With omega = 0, i db1/dt = -(D/3) b1, so |db1/dt| = |D|/3 |b1|.
        let dd = 2.0 - 0.7 + 1.3 * st.p();
        let lhs = (d.b1_re * d.b1_re + d.b1_im * d.b1_im).sqrt();
        let rhs = dd.abs() / 3.0 * (st.b1_re * st.b1_re + st.b1_im * st.b1_im).sqrt();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    /// The two chart derivatives describe the same flow: push the angle-chart
    /// rates through the Jacobian of the angle -> amplitude map (finite
    /// difference) and compare with the amplitude rates.
    #[test]
    fn chart_rates_are_consistent() {
        let ctrl = ControlSample::new(1.3, -0.4);
        let params = SystemParams { lambda_a: 0.2, lambda_s: -0.5 };
        let ang = AngleState { theta: 1.1, alpha: 0.7, gamma: -0.3 };
        let da = angle_rhs(&ang, ctrl, &params, 0.0).unwrap();
        let amp = ang.to_amplitudes();
        let damp = amplitude_rhs(&amp, ctrl, &params);
        let eps = 1e-6;
        let plus = AngleState {
            theta: ang.theta + eps * da.theta,
            alpha: ang.alpha + eps * da.alpha,
            gamma: ang.gamma + eps * da.gamma,
        }
        .to_amplitudes();
        let fd = [
            (plus.b1_re - amp.b1_re) / eps,
            (plus.b1_im - amp.b1_im) / eps,
            (plus.b2_re - amp.b2_re) / eps,
            (plus.b2_im - amp.b2_im) / eps,
        ];
        let an = [damp.b1_re, damp.b1_im, damp.b2_re, damp.b2_im];
        for (f, a) in fd.iter().zip(an) {
            assert!((f - a).abs() < 1e-5, "finite-difference {f} vs analytic {a}");
        }
    }

    proptest! {
        /// The flow conserves the norm: the derivative of |b1|^2 + 2|b2|^2
        /// along the vector field vanishes identically.
        #[test]
        fn norm_is_first_integral(
            x1 in -1.0f64..1.0, y1 in -1.0f64..1.0,
            x2 in -1.0f64..1.0, y2 in -1.0f64..1.0,
            om in 0.0f64..5.0, de in -5.0f64..5.0,
            la in -2.0f64..2.0, ls in -2.0f64..2.0,
        ) {
            let s = AmplitudeState { b1_re: x1, b1_im: y1, b2_re: x2, b2_im: y2 };
            let d = amplitude_rhs(&s, ControlSample::new(om, de),
                &SystemParams { lambda_a: la, lambda_s: ls });
            let ddt = 2.0 * (s.b1_re * d.b1_re + s.b1_im * d.b1_im)
                + 4.0 * (s.b2_re * d.b2_re + s.b2_im * d.b2_im);
            prop_assert!(ddt.abs() < 1e-13);
        }

        /// Angle -> amplitude -> angle round trip and the two Bloch
        /// projections agree.
        #[test]
        fn chart_round_trip(
            theta in 0.05f64..(PI - 0.05),
            alpha in -3.0f64..3.0,
            gamma in -3.0f64..3.0,
        ) {
            let ang = AngleState { theta, alpha, gamma };
            let amp = ang.to_amplitudes();
            prop_assert!((amp.norm() - 1.0).abs() < 1e-14);
            let back = amp.to_angles();
            prop_assert!((back.theta - theta).abs() < 1e-12);
            // Phases compare modulo 2 pi.
            let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
            prop_assert!(wrap(back.gamma - gamma).abs() < 1e-12);
            prop_assert!(wrap(back.alpha - alpha).abs() < 1e-11);
            let ba = amp.to_bloch();
            let bb = ang.to_bloch();
            prop_assert!((ba.pi_x - bb.pi_x).abs() < 1e-12);
            prop_assert!((ba.pi_y - bb.pi_y).abs() < 1e-12);
            prop_assert!((ba.p - bb.p).abs() < 1e-13);
            prop_assert!(ba.sphere_residual().abs() < 1e-13);
        }

        /// Renormalization keeps slightly off-shell states on the surface.
        #[test]
        fn bloch_projection_absorbs_norm_drift(
            theta in 0.05f64..(PI - 0.05),
            alpha in -3.0f64..3.0,
            drift in -1e-8f64..1e-8,
        ) {
            let amp = AngleState { theta, alpha, gamma: 0.4 }.to_amplitudes();
            let scale = (1.0 + drift).sqrt();
            let off = AmplitudeState {
                b1_re: amp.b1_re * scale,
                b1_im: amp.b1_im * scale,
                b2_re: amp.b2_re * scale,
                b2_im: amp.b2_im * scale,
            };
            prop_assert!(off.to_bloch().sphere_residual().abs() < 1e-13);
        }
    }
}
