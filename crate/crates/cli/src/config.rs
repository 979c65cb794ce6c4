//! TOML run configurations. Every command has its own root struct so that a
//! section belonging to a different command is rejected as an unknown key,
//! and all structs deny unknown fields outright.

use anyhow::{bail, Context, Result};
use res12_core::{
    ConstantPulse, Perturbation, Pulse, RobustDesign, RobustPulse, SystemParams, TrackingDesign,
    TrackingPulse,
};
use serde::Deserialize;
use std::path::Path;

/// Inclusive range with a point count, written as "lo:hi:n".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        res12_core::linspace(self.lo, self.hi, self.n)
    }
}

impl std::fmt::Display for Range {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

impl std::str::FromStr for Range {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("range must be written lo:hi:n, got {s:?}");
        }
        let lo: f64 = parts[0].parse().with_context(|| format!("bad range start {:?}", parts[0]))?;
        let hi: f64 = parts[1].parse().with_context(|| format!("bad range end {:?}", parts[1]))?;
        let n: usize = parts[2].parse().with_context(|| format!("bad range count {:?}", parts[2]))?;
        if n == 0 {
            bail!("range needs at least one point: {s:?}");
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            bail!("range bounds must be finite and ordered: {s:?}");
        }
        Ok(Range { lo, hi, n })
    }
}

impl<'de> Deserialize<'de> for Range {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// "constant", "tracking" or "robust".
    pub kind: String,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub omega0: Option<f64>,
    pub t_char: Option<f64>,
    pub epsilon: Option<f64>,
    pub coefficients: Option<Vec<f64>>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            kind: "tracking".into(),
            omega: None,
            delta: None,
            omega0: None,
            t_char: None,
            epsilon: None,
            coefficients: None,
        }
    }
}

/// A pulse built from its configuration; owns the underlying object.
pub enum BuiltPulse {
    Constant(ConstantPulse),
    Tracking(TrackingPulse),
    Robust(RobustPulse),
}

impl BuiltPulse {
    pub fn as_dyn(&self) -> &dyn Pulse {
        match self {
            BuiltPulse::Constant(p) => p,
            BuiltPulse::Tracking(p) => p,
            BuiltPulse::Robust(p) => p,
        }
    }
}

fn reject_foreign(kind: &str, fields: &[(&str, bool)]) -> Result<()> {
    for (name, present) in fields {
        if *present {
            bail!("field {name:?} does not apply to pulse kind {kind:?}");
        }
    }
    Ok(())
}

impl PulseConfig {
    pub fn build(&self, params: SystemParams) -> Result<BuiltPulse> {
        match self.kind.as_str() {
            "constant" => {
                reject_foreign(
                    "constant",
                    &[
                        ("omega0", self.omega0.is_some()),
                        ("t_char", self.t_char.is_some()),
                        ("epsilon", self.epsilon.is_some()),
                        ("coefficients", self.coefficients.is_some()),
                    ],
                )?;
                let omega = self.omega.context("constant pulse needs omega")?;
                let delta = self.delta.context("constant pulse needs delta")?;
                if !(omega >= 0.0) {
                    bail!("constant pulse needs omega >= 0, got {omega}");
                }
                Ok(BuiltPulse::Constant(ConstantPulse { omega, delta }))
            }
            "tracking" => {
                reject_foreign(
                    "tracking",
                    &[
                        ("omega", self.omega.is_some()),
                        ("delta", self.delta.is_some()),
                        ("epsilon", self.epsilon.is_some()),
                        ("coefficients", self.coefficients.is_some()),
                    ],
                )?;
                let omega0 = self.omega0.unwrap_or(10.0);
                let t_char = self.t_char.unwrap_or(1.0);
                if !(omega0 > 0.0 && t_char > 0.0) {
                    bail!("tracking pulse needs omega0 > 0 and t_char > 0");
                }
                Ok(BuiltPulse::Tracking(TrackingPulse::new(TrackingDesign { omega0, t_char })))
            }
            "robust" => {
                reject_foreign(
                    "robust",
                    &[
                        ("omega", self.omega.is_some()),
                        ("delta", self.delta.is_some()),
                        ("omega0", self.omega0.is_some()),
                    ],
                )?;
                let design = RobustDesign::new(
                    self.epsilon.unwrap_or(0.03),
                    self.coefficients.clone().unwrap_or_else(|| vec![-0.5]),
                    self.t_char.unwrap_or(1.0),
                )?;
                Ok(BuiltPulse::Robust(RobustPulse::new(design, params)?))
            }
            other => bail!("unknown pulse kind {other:?} (expected constant, tracking or robust)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub delta0: f64,
    #[serde(default)]
    pub beta: f64,
}

impl PerturbationConfig {
    pub fn as_perturbation(&self) -> Perturbation {
        Perturbation { delta0: self.delta0, beta: self.beta }
    }

    pub fn is_identity(&self) -> bool {
        self.delta0 == 0.0 && self.beta == 0.0
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanConfig {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub lambda_a: f64,
    #[serde(default)]
    pub lambda_s: f64,
}

impl ParamsConfig {
    pub fn as_params(&self) -> SystemParams {
        SystemParams { lambda_a: self.lambda_a, lambda_s: self.lambda_s }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    pub span: Option<SpanConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdiabaticConfig {
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    #[serde(default = "default_t_char")]
    pub t_char: f64,
}

fn default_omega0() -> f64 {
    10.0
}

fn default_t_char() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.03
}

fn default_coefficients() -> Vec<f64> {
    vec![-0.5]
}

impl Default for AdiabaticConfig {
    fn default() -> Self {
        AdiabaticConfig { omega0: 10.0, t_char: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_coefficients")]
    pub coefficients: Vec<f64>,
    #[serde(default = "default_t_char")]
    pub t_char: f64,
    #[serde(default)]
    pub params: ParamsConfig,
}

impl Default for RobustConfig {
    fn default() -> Self {
        RobustConfig {
            epsilon: 0.03,
            coefficients: vec![-0.5],
            t_char: 1.0,
            params: ParamsConfig::default(),
        }
    }
}

/// Frozen fields for a portrait come either from literal `omega`/`delta`
/// values or from sampling a pulse at one instant (`pulse` + `time`), with
/// an optional static detuning offset added on top.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PortraitConfig {
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub pulse: Option<PulseConfig>,
    pub time: Option<f64>,
    pub delta0: f64,
    pub params: ParamsConfig,
    pub separatrix_samples: Option<usize>,
    pub contours: Option<usize>,
    pub contour_samples: Option<usize>,
}

impl PortraitConfig {
    /// The control sample to freeze, plus a human-readable source tag for
    /// the output header.
    pub fn resolve_ctrl(&self) -> Result<(res12_core::ControlSample, String)> {
        if let Some(pulse_cfg) = &self.pulse {
            if self.omega.is_some() || self.delta.is_some() {
                bail!("give either omega/delta or a pulse snapshot, not both");
            }
            let t = self.time.context("a pulse snapshot needs a time")?;
            let pulse = pulse_cfg.build(self.params.as_params())?;
            let mut ctrl = pulse.as_dyn().sample(t);
            ctrl.delta += self.delta0;
            let tag = format!(
                "pulse=[{}] time={} delta0={}",
                pulse.as_dyn().describe(),
                t,
                self.delta0
            );
            return Ok((ctrl, tag));
        }
        if self.time.is_some() {
            bail!("time only applies to a pulse snapshot; add a [pulse] section");
        }
        let omega = self.omega.unwrap_or(1.0);
        let delta = self.delta.unwrap_or(0.5) + self.delta0;
        if !(omega >= 0.0) {
            bail!("portrait needs omega >= 0, got {omega}");
        }
        Ok((
            res12_core::ControlSample::new(omega, delta),
            format!("omega={omega} delta={delta}"),
        ))
    }
}

fn default_delta0_range() -> Range {
    Range { lo: -0.6, hi: 0.6, n: 61 }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scan1dConfig {
    #[serde(default = "default_robust_pulse")]
    pub pulse: PulseConfig,
    #[serde(default = "default_delta0_range")]
    pub delta0: Range,
    pub span: Option<SpanConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
}

fn default_robust_pulse() -> PulseConfig {
    PulseConfig { kind: "robust".into(), ..PulseConfig::default() }
}

impl Default for Scan1dConfig {
    fn default() -> Self {
        Scan1dConfig {
            pulse: default_robust_pulse(),
            delta0: default_delta0_range(),
            span: None,
            params: ParamsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scan2dConfig {
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default = "default_map_delta0")]
    pub delta0: Range,
    #[serde(default = "default_map_beta")]
    pub beta: Range,
    pub span: Option<SpanConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
}

fn default_map_delta0() -> Range {
    Range { lo: -1.0, hi: 1.0, n: 41 }
}

fn default_map_beta() -> Range {
    Range { lo: -0.2, hi: 0.2, n: 41 }
}

impl Default for Scan2dConfig {
    fn default() -> Self {
        Scan2dConfig {
            pulse: PulseConfig::default(),
            delta0: default_map_delta0(),
            beta: default_map_beta(),
            span: None,
            params: ParamsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneConfig {
    pub delta0: [f64; 2],
    #[serde(default)]
    pub beta: [f64; 2],
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaPenaltyConfig {
    pub weight: f64,
    pub cap: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub zone: Option<ZoneConfig>,
    pub coarse: Option<[usize; 2]>,
    pub fine: Option<[usize; 2]>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_t_char")]
    pub t_char: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_simplex_scale")]
    pub simplex_scale: f64,
    pub initial: Option<Vec<f64>>,
    pub area_penalty: Option<AreaPenaltyConfig>,
}

fn default_n() -> usize {
    1
}

fn default_budget() -> usize {
    500
}

fn default_seed() -> u64 {
    20260824
}

fn default_simplex_scale() -> f64 {
    1.0
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            n: 1,
            zone: None,
            coarse: None,
            fine: None,
            epsilon: 0.03,
            t_char: 1.0,
            budget: 500,
            seed: default_seed(),
            simplex_scale: 1.0,
            initial: None,
            area_penalty: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AreaConfig {
    #[serde(default)]
    pub pulse: PulseConfig,
    pub span: Option<SpanConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
}

/// Load a command config from an optional TOML file; a missing flag means
/// all defaults.
pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

/// Pick the integration span: explicit config wins, otherwise the pulse's
/// natural span; constant pulses have none and require an explicit span.
pub fn resolve_span(span: Option<SpanConfig>, pulse: &dyn Pulse) -> Result<(f64, f64)> {
    if let Some(s) = span {
        if !(s.start < s.end) {
            bail!("span must satisfy start < end, got [{}, {}]", s.start, s.end);
        }
        return Ok((s.start, s.end));
    }
    pulse
        .natural_span()
        .context("this pulse has no natural span; add a [span] section to the config")
}
