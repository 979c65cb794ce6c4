//! Simulation and pulse-design toolkit for a driven two-level system with a
//! second-harmonic (1:2) resonance nonlinearity.
//!
//! The crate covers the full workflow:
//!
//! * [`model`]: state representations (complex amplitudes, angle chart,
//!   Bloch-like projection) and the equations of motion in both charts.
//! * [`ode`]: an embedded Runge-Kutta 5(4) integrator with dense output and
//!   adaptive quadrature, shared by everything downstream.
//! * [`sim`]: driving a state with a time-dependent pulse and the closed-form
//!   population transfer for flat resonant driving.
//! * [`phase_space`]: fixed points, linear stability, separatrix geometry and
//!   full phase portraits of the frozen-control flow.
//! * [`adiabatic`]: tracking pulse that rides an elliptic fixed point from
//!   the ground state to inversion.
//! * [`robust`]: inverse-engineered pulse shapes built from a target
//!   trajectory with tunable phase coefficients.
//! * [`robustness`]: fidelity of a pulse under static detuning and amplitude
//!   errors, 1D/2D error scans and zone averages.
//! * [`optimizer`]: Nelder-Mead search over the robust-design coefficients.
// Guards are written `!(x > 0.0)` on purpose: the negated form also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod error;
pub mod model;
pub mod ode;
pub mod optimizer;
pub mod phase_space;
pub mod pulse;
pub mod robust;
pub mod robustness;
pub mod sim;

pub use adiabatic::{p_track, tracking_controls, TrackingDesign, TrackingPulse};
pub use error::Error;
pub use model::{
    amplitude_rhs, angle_rhs, AmplitudeState, AngleState, BlochVector, ControlSample, SystemParams,
};
pub use ode::{adaptive_simpson, linspace, solve_ivp, IntegratorConfig, OdeSolution};
pub use optimizer::{objective, optimize, AreaPenalty, OptimizeResult, OptimizeSpec, Termination, TraceEntry};
pub use phase_space::{
    classify_target, fixed_points, hamiltonian, jacobian, portrait, reduced_rhs, separatrix,
    Contour, FixedPoint, Portrait, PortraitOptions, SeparatrixCurve, Stability,
};
pub use pulse::{pulse_area, ConstantPulse, Pulse};
pub use robust::{
    gamma_expansion, shape_fields, shape_fields_diagnostic, solve_alpha, theta_profile, DesignSolution, RobustDesign,
    RobustPulse,
};
pub use robustness::{
    final_population, perturb, scan_1d, scan_2d, zone_average, Perturbation, PerturbedPulse,
    ScanMeta, ScanResult, Zone, FIDELITY_CAP,
};
pub use sim::{closed_form_population, integrate_amplitude, integrate_angle, Trajectory};
