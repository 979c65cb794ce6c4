use thiserror::Error;

/// Error type shared by all toolkit operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Angle-chart equations evaluated too close to a pole of the chart.
    #[error("angle chart singular at t = {t}: sin(theta/2) = {sin_half_theta:.3e} below 1e-12")]
    ChartSingularity { t: f64, sin_half_theta: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t} (h = {h:.3e}); system too stiff or singular")]
    StepUnderflow { t: f64, h: f64 },

    #[error("sample time {t} outside integration span [{t0}, {t1}]")]
    SampleOutOfSpan { t: f64, t0: f64, t1: f64 },

    #[error("no separatrix: |delta/omega| = {ratio} is not < 1")]
    NoSeparatrix { ratio: f64 },

    #[error("target-pole classification requires omega > 0")]
    ZeroOmegaTarget,

    /// The auxiliary-angle equation left its validity strip.
    #[error("invalid design: alpha reached {alpha:.6} at theta = {theta:.6}, outside (0, pi) by margin 1e-6")]
    InvalidDesign { theta: f64, alpha: f64 },

    #[error("amplitude error beta = {beta} makes 1 + beta non-positive")]
    BadPerturbation { beta: f64 },

    #[error("zone contains no grid points")]
    EmptyZone,

    #[error("quadrature failed to converge on [{a}, {b}]")]
    QuadratureDepth { a: f64, b: f64 },
}
