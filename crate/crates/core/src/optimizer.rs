//! Derivative-free search over the gamma-series coefficients of the robust
//! design, maximizing zone-averaged transfer fidelity with a Nelder-Mead
//! simplex (standard move coefficients) plus seeded restarts when the
//! simplex collapses.

use crate::error::Error;
use crate::model::SystemParams;
use crate::ode::{linspace, IntegratorConfig};
use crate::pulse::{pulse_area, Pulse};
use crate::robust::{RobustDesign, RobustPulse};
use crate::robustness::{scan_2d, zone_average, Zone};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Optional pressure against large pulse areas: subtracts
/// weight * max(0, area - cap) from the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaPenalty {
    pub weight: f64,
    pub cap: f64,
}

/// Search specification: number of series coefficients, the error zone the
/// fidelity is averaged over, grid resolutions for search and final
/// re-scoring, the design shape parameters, and the evaluation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    pub n: usize,
    pub zone: Zone,
    /// (detuning points, amplitude points) used during the search.
    pub coarse_grid: (usize, usize),
    /// Resolution for the final re-score of the best design.
    pub fine_grid: (usize, usize),
    pub epsilon: f64,
    pub t_char: f64,
    pub budget: usize,
    pub seed: u64,
    /// Edge length of the initial simplex; larger values explore more of the
    /// coefficient space before the first collapse.
    pub simplex_scale: f64,
    pub area_penalty: Option<AreaPenalty>,
}

impl OptimizeSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("need at least one coefficient".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("evaluation budget must be positive".into()));
        }
        if self.coarse_grid.0 == 0 || self.coarse_grid.1 == 0 || self.fine_grid.0 == 0 || self.fine_grid.1 == 0
        {
            return Err(Error::InvalidConfig("grid resolutions must be positive".into()));
        }
        if self.zone.delta0.0 > self.zone.delta0.1 || self.zone.beta.0 > self.zone.beta.1 {
            return Err(Error::InvalidConfig("zone bounds must be ordered".into()));
        }
        if !(1.0 + self.zone.beta.0 > 0.0) {
            return Err(Error::BadPerturbation { beta: self.zone.beta.0 });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1): {}", self.epsilon)));
        }
        if !(self.t_char > 0.0) {
            return Err(Error::InvalidConfig("t_char must be positive".into()));
        }
        if !(self.simplex_scale > 0.0) {
            return Err(Error::InvalidConfig("simplex scale must be positive".into()));
        }
        if let Some(p) = self.area_penalty {
            if !(p.weight >= 0.0) || !p.cap.is_finite() {
                return Err(Error::InvalidConfig("invalid area penalty".into()));
            }
        }
        Ok(())
    }

    fn grids(&self, resolution: (usize, usize)) -> (Vec<f64>, Vec<f64>) {
        (
            linspace(self.zone.delta0.0, self.zone.delta0.1, resolution.0),
            linspace(self.zone.beta.0, self.zone.beta.1, resolution.1),
        )
    }
}

fn score_on(spec: &OptimizeSpec, coefficients: &[f64], resolution: (usize, usize)) -> Result<f64, Error> {
    let design = RobustDesign::new(spec.epsilon, coefficients.to_vec(), spec.t_char)?;
    let pulse = match RobustPulse::new(design, SystemParams::default()) {
        Ok(p) => p,
        // Paths that cannot be driven by finite fields score zero.
        Err(Error::InvalidDesign { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let span = pulse.natural_span().unwrap();
    let (d_grid, b_grid) = spec.grids(resolution);
    let cfg = IntegratorConfig::default();
    let result = match scan_2d(&pulse, &d_grid, &b_grid, &SystemParams::default(), span, &cfg) {
        Ok(r) => r,
        Err(Error::StepUnderflow { .. }) | Err(Error::ChartSingularity { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut value = zone_average(&result, spec.zone)?;
    if let Some(pen) = spec.area_penalty {
        let area = pulse_area(&pulse, span)?;
        value -= pen.weight * (area - pen.cap).max(0.0);
    }
    Ok(value)
}

/// Search objective for a coefficient vector: zone-averaged fidelity on the
/// coarse grid, minus the optional area penalty; designs whose auxiliary
/// angle leaves its validity strip score 0.
pub fn objective(spec: &OptimizeSpec, coefficients: &[f64]) -> Result<f64, Error> {
    spec.validate()?;
    score_on(spec, coefficients, spec.coarse_grid)
}

/// One objective evaluation in the search history.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub index: usize,
    pub coefficients: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The evaluation budget ran out; normal for exploratory runs.
    BudgetExhausted,
    /// Repeated restarts stopped improving the best value.
    Converged,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: Vec<f64>,
    /// Best coarse-grid objective seen during the search.
    pub best_objective: f64,
    /// The best design re-scored on the fine grid.
    pub fine_objective: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
    pub termination: Termination,
}

// Standard Nelder-Mead move coefficients.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Simplex diameter below which the search restarts around the incumbent.
const RESTART_DIAMETER: f64 = 1e-4;
/// Coordinate scale of the seeded restart perturbations.
const RESTART_SCALE: f64 = 0.1;
/// Restarts stop once they improve the best value by less than this.
const IMPROVEMENT_TOL: f64 = 1e-6;
const MAX_FLAT_RESTARTS: u32 = 3;

struct Search<'a> {
    spec: &'a OptimizeSpec,
    trace: Vec<TraceEntry>,
    best: Vec<f64>,
    best_value: f64,
    error: Option<Error>,
}

impl<'a> Search<'a> {
    /// Returns None once the budget is exhausted or an error occurred.
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.error.is_some() || self.trace.len() >= self.spec.budget {
            return None;
        }
        match score_on(self.spec, x, self.spec.coarse_grid) {
            Ok(v) => {
                self.trace.push(TraceEntry {
                    index: self.trace.len(),
                    coefficients: x.to_vec(),
                    objective: v,
                });
                if v > self.best_value {
                    self.best_value = v;
                    self.best = x.to_vec();
                }
                Some(v)
            }
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..simplex.len() {
        for j in (i + 1)..simplex.len() {
            let dist: f64 = simplex[i]
                .iter()
                .zip(&simplex[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Maximize the objective starting from `initial` (length `spec.n`).
/// Deterministic for a fixed spec: restart noise comes from a counter-based
/// generator seeded with `spec.seed`. The returned best design is re-scored
/// on the fine grid.
pub fn optimize(spec: &OptimizeSpec, initial: &[f64]) -> Result<OptimizeResult, Error> {
    spec.validate()?;
    if initial.len() != spec.n {
        return Err(Error::InvalidConfig(format!(
            "initial vector has length {}, expected {}",
            initial.len(),
            spec.n
        )));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut search = Search {
        spec,
        trace: Vec::new(),
        best: initial.to_vec(),
        best_value: f64::NEG_INFINITY,
        error: None,
    };

    let mut center = initial.to_vec();
    let mut step = spec.simplex_scale;
    let mut flat_restarts = 0u32;
    let mut termination = Termination::BudgetExhausted;

    'outer: loop {
        // Build and evaluate a fresh simplex around `center`.
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(center.clone());
        for i in 0..n {
            let mut v = center.clone();
            v[i] += step;
            simplex.push(v);
        }
        let mut values = Vec::with_capacity(n + 1);
        for v in &simplex {
            match search.eval(v) {
                Some(val) => values.push(val),
                None => break 'outer,
            }
        }
        let best_at_restart = search.best_value;

        loop {
            // Sort descending: index 0 best, index n worst.
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
            let reorder_s: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let reorder_v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
            simplex = reorder_s;
            values = reorder_v;

            if diameter(&simplex) < RESTART_DIAMETER {
                let improved = search.best_value - best_at_restart;
                if improved < IMPROVEMENT_TOL {
                    flat_restarts += 1;
                    if flat_restarts >= MAX_FLAT_RESTARTS {
                        termination = Termination::Converged;
                        break 'outer;
                    }
                } else {
                    flat_restarts = 0;
                }
                center = search.best.clone();
                for c in center.iter_mut() {
                    *c += rng.random_range(-RESTART_SCALE..RESTART_SCALE);
                }
                step = RESTART_SCALE;
                continue 'outer;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let mix = |a: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(c, w)| c + a * (c - w))
                    .collect()
            };

            let reflected = mix(REFLECT);
            let Some(fr) = search.eval(&reflected) else { break 'outer };
            if fr > values[0] {
                let expanded = mix(REFLECT * EXPAND);
                let Some(fe) = search.eval(&expanded) else { break 'outer };
                if fe > fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr > values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                let contracted = mix(-CONTRACT);
                let Some(fc) = search.eval(&contracted) else { break 'outer };
                if fc > values[n] {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    // Shrink everything towards the best vertex.
                    for i in 1..=n {
                        let target: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(b, v)| b + SHRINK * (v - b))
                            .collect();
                        let Some(fv) = search.eval(&target) else { break 'outer };
                        simplex[i] = target;
                        values[i] = fv;
                    }
                }
            }
        }
    }

    if let Some(e) = search.error {
        return Err(e);
    }
    if search.trace.is_empty() {
        return Err(Error::InvalidConfig("budget too small for any evaluation".into()));
    }
    let fine_objective = score_on(spec, &search.best, spec.fine_grid)?;
    Ok(OptimizeResult {
        best: search.best,
        best_objective: search.best_value,
        fine_objective,
        evaluations: search.trace.len(),
        trace: search.trace,
        termination,
    })
}
