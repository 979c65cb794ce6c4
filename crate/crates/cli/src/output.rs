//! Command bodies: run the computation, write CSV/TOML artifacts, print a
//! one-line summary. Files are assembled in memory and written atomically at
//! the end, so a failed run never leaves a partial table behind.

use crate::config::{
    AdiabaticConfig, AreaConfig, OptimizeConfig, PortraitConfig, RobustConfig, Scan1dConfig,
    Scan2dConfig, SimulateConfig,
};
use anyhow::{Context, Result};
use res12_core::{
    gamma_expansion, linspace, optimize, perturb, portrait, pulse_area, scan_1d, scan_2d,
    shape_fields_diagnostic, theta_profile, tracking_controls, AmplitudeState, IntegratorConfig,
    OptimizeResult, OptimizeSpec, Pulse, PortraitOptions, RobustPulse, Termination,
    TrackingDesign, TrackingPulse, Zone,
};
use std::fmt::Write as _;
use std::path::Path;

const PI: f64 = std::f64::consts::PI;

/// Flags shared by every subcommand, already merged with their defaults.
pub struct RunOptions<'a> {
    pub out: &'a Path,
    pub samples: usize,
    pub integrator: IntegratorConfig,
}

fn write_file(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// CSV table with one leading `#` comment line recording the resolved run.
struct Csv {
    text: String,
}

impl Csv {
    fn new(comment: &str, header: &str) -> Self {
        Csv { text: format!("# {comment}\n{header}\n") }
    }

    fn row(&mut self, fields: &[f64]) {
        for (i, x) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            // f64 Display is shortest-round-trip, so readers recover the
            // exact bits.
            let _ = write!(self.text, "{x}");
        }
        self.text.push('\n');
    }
}

pub fn simulate(cfg: &SimulateConfig, opts: &RunOptions) -> Result<()> {
    let params = cfg.params.as_params();
    let base = cfg.pulse.build(params)?;
    let span = crate::config::resolve_span(cfg.span, base.as_dyn())?;
    let times = linspace(span.0, span.1, opts.samples);

    let pert = cfg.perturbation.as_perturbation();
    let perturbed;
    let pulse: &dyn Pulse = if cfg.perturbation.is_identity() {
        base.as_dyn()
    } else {
        perturbed = perturb(base.as_dyn(), pert)?;
        &perturbed
    };

    let traj = res12_core::integrate_amplitude(
        pulse,
        &params,
        AmplitudeState::ground(),
        span,
        &opts.integrator,
        &times,
    )?;

    let comment = format!(
        "simulate pulse=[{}] perturbation=[delta0={} beta={}] span=[{}, {}] \
         lambda_a={} lambda_s={} rel_tol={} abs_tol={}",
        pulse.describe(),
        pert.delta0,
        pert.beta,
        span.0,
        span.1,
        params.lambda_a,
        params.lambda_s,
        opts.integrator.rel_tol,
        opts.integrator.abs_tol,
    );
    let mut csv = Csv::new(&comment, "t,b1_re,b1_im,b2_re,b2_im,p,pi_x,pi_y,omega,delta");
    for ((t, s), c) in traj.times.iter().zip(&traj.states).zip(&traj.controls) {
        let bloch = s.to_bloch();
        csv.row(&[
            *t, s.b1_re, s.b1_im, s.b2_re, s.b2_im, s.p(), bloch.pi_x, bloch.pi_y, c.omega,
            c.delta,
        ]);
    }
    write_file(opts.out, "trajectory.csv", &csv.text)?;
    println!("final population p = {:.12}", traj.final_p());
    Ok(())
}

pub fn design_adiabatic(cfg: &AdiabaticConfig, opts: &RunOptions) -> Result<()> {
    let design = TrackingDesign { omega0: cfg.omega0, t_char: cfg.t_char };
    let pulse = TrackingPulse::new(design);
    let span = pulse.natural_span().expect("tracking pulses have a finite span");
    let times = linspace(span.0, span.1, opts.samples);

    let comment = format!(
        "design adiabatic omega0={} t_char={} span=[{}, {}]",
        cfg.omega0, cfg.t_char, span.0, span.1
    );
    let mut csv = Csv::new(&comment, "t,omega,delta,p_track");
    for &t in &times {
        let (ctrl, p) = tracking_controls(&pulse.design, t);
        csv.row(&[t, ctrl.omega, ctrl.delta, p]);
    }
    write_file(opts.out, "pulse_adiabatic.csv", &csv.text)?;

    let area = pulse_area(&pulse, span)?;
    println!("pulse area = {:.6} ({:.6} pi)", area, area / PI);
    Ok(())
}

pub fn design_robust(cfg: &RobustConfig, opts: &RunOptions) -> Result<()> {
    let params = cfg.params.as_params();
    let design =
        res12_core::RobustDesign::new(cfg.epsilon, cfg.coefficients.clone(), cfg.t_char)?;
    let pulse = RobustPulse::new(design, params)?;
    let span = pulse.natural_span().expect("robust pulses have a finite span");
    let times = linspace(span.0, span.1, opts.samples);

    let comment = format!(
        "design robust epsilon={} coefficients={:?} t_char={} span=[{}, {}] \
         lambda_a={} lambda_s={}",
        pulse.design.epsilon,
        pulse.design.coefficients,
        pulse.design.t_char,
        span.0,
        span.1,
        params.lambda_a,
        params.lambda_s,
    );
    let mut csv = Csv::new(&comment, "t,theta,alpha,gamma,omega,delta");
    let mut max_disc: f64 = 0.0;
    for &t in &times {
        let (theta, _) = theta_profile(&pulse.design, t);
        let alpha = pulse.solution.alpha_at(theta);
        let (gamma, _) = gamma_expansion(&pulse.design, theta);
        let (ctrl, disc) = shape_fields_diagnostic(&pulse.design, &pulse.solution, &params, t);
        max_disc = max_disc.max(disc.abs());
        csv.row(&[t, theta, alpha, gamma, ctrl.omega, ctrl.delta]);
    }
    write_file(opts.out, "pulse_robust.csv", &csv.text)?;

    let area = pulse_area(&pulse, span)?;
    println!(
        "pulse area = {:.6} ({:.6} pi), target population = {:.10}",
        area,
        area / PI,
        pulse.design.target_population()
    );
    println!("max detuning-form discrepancy on the sample grid = {max_disc:.3e}");
    Ok(())
}

pub fn portrait_cmd(cfg: &PortraitConfig, opts: &RunOptions) -> Result<()> {
    let (ctrl, source) = cfg.resolve_ctrl()?;
    let defaults = PortraitOptions::default();
    let popts = PortraitOptions {
        separatrix_samples: cfg.separatrix_samples.unwrap_or(defaults.separatrix_samples),
        n_contours: cfg.contours.unwrap_or(defaults.n_contours),
        contour_samples: cfg.contour_samples.unwrap_or(defaults.contour_samples),
    };
    let por = portrait(ctrl, &popts)?;

    let comment = format!(
        "portrait {source} (frozen omega={} delta={}) separatrix_samples={} contours={} \
         contour_samples={}",
        ctrl.omega, ctrl.delta, popts.separatrix_samples, popts.n_contours, popts.contour_samples
    );
    let mut text = format!("# {comment}\ncurve_id,p,alpha,pi_x,pi_y,kind\n");
    let bloch = |p: f64, alpha: f64| {
        let r = 2.0 * std::f64::consts::SQRT_2 * (1.0 - p) * p.sqrt();
        (r * alpha.cos(), r * alpha.sin())
    };
    for (i, fp) in por.fixed_points.iter().enumerate() {
        let (px, py) = match fp.alpha {
            Some(a) => bloch(fp.p, a),
            None => (0.0, 0.0),
        };
        let alpha_txt =
            fp.alpha.map(|a| format!("{a}")).unwrap_or_else(|| "NaN".to_string());
        let _ = writeln!(
            text,
            "fp{i},{},{alpha_txt},{px},{py},{}",
            fp.p,
            fp.kind.as_str()
        );
    }
    if let Some(sep) = &por.separatrix {
        for &(p, alpha) in &sep.samples {
            let (px, py) = bloch(p, alpha);
            let _ = writeln!(text, "separatrix,{p},{alpha},{px},{py},separatrix");
        }
    }
    for (i, contour) in por.contours.iter().enumerate() {
        for &(p, alpha) in &contour.samples {
            let (px, py) = bloch(p, alpha);
            let _ = writeln!(text, "contour{i},{p},{alpha},{px},{py},contour");
        }
    }
    write_file(opts.out, "portrait.csv", &text)?;

    println!(
        "{} fixed points, separatrix {}, {} contours",
        por.fixed_points.len(),
        if por.separatrix.is_some() { "present" } else { "absent" },
        por.contours.len()
    );
    Ok(())
}

fn scan_sidecar(
    command: &str,
    meta: &res12_core::ScanMeta,
    delta0: &crate::config::Range,
    beta: Option<&crate::config::Range>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command:?}");
    let _ = writeln!(s, "version = {:?}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "pulse = {:?}", meta.pulse);
    let _ = writeln!(s, "t_span = [{:?}, {:?}]", meta.t_span.0, meta.t_span.1);
    let _ = writeln!(s, "rel_tol = {:?}", meta.rel_tol);
    let _ = writeln!(s, "abs_tol = {:?}", meta.abs_tol);
    let _ = writeln!(s, "delta0 = {:?}", delta0.to_string());
    if let Some(b) = beta {
        let _ = writeln!(s, "beta = {:?}", b.to_string());
    }
    s
}

pub fn scan_1d_cmd(cfg: &Scan1dConfig, opts: &RunOptions) -> Result<()> {
    let params = cfg.params.as_params();
    let pulse = cfg.pulse.build(params)?;
    let span = crate::config::resolve_span(cfg.span, pulse.as_dyn())?;
    let grid = cfg.delta0.points();
    let fid = scan_1d(pulse.as_dyn(), &grid, &params, span, &opts.integrator)?;

    let comment = format!(
        "scan 1d pulse=[{}] delta0={} span=[{}, {}] rel_tol={}",
        pulse.as_dyn().describe(),
        cfg.delta0,
        span.0,
        span.1,
        opts.integrator.rel_tol
    );
    let mut csv = Csv::new(&comment, "delta0,beta,fidelity");
    for (&d, &f) in grid.iter().zip(&fid) {
        csv.row(&[d, 0.0, f]);
    }
    write_file(opts.out, "scan.csv", &csv.text)?;

    let meta = res12_core::ScanMeta {
        pulse: pulse.as_dyn().describe(),
        t_span: span,
        rel_tol: opts.integrator.rel_tol,
        abs_tol: opts.integrator.abs_tol,
    };
    write_file(opts.out, "scan.meta.toml", &scan_sidecar("scan 1d", &meta, &cfg.delta0, None))?;

    let (i_best, best) = fid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    println!("best fidelity {:.6} at delta0 = {}", best, grid[i_best]);
    Ok(())
}

pub fn scan_2d_cmd(cfg: &Scan2dConfig, opts: &RunOptions) -> Result<()> {
    let params = cfg.params.as_params();
    let pulse = cfg.pulse.build(params)?;
    let span = crate::config::resolve_span(cfg.span, pulse.as_dyn())?;
    let d_grid = cfg.delta0.points();
    let b_grid = cfg.beta.points();
    let result = scan_2d(pulse.as_dyn(), &d_grid, &b_grid, &params, span, &opts.integrator)?;

    let comment = format!(
        "scan 2d pulse=[{}] delta0={} beta={} span=[{}, {}] rel_tol={}",
        result.meta.pulse, cfg.delta0, cfg.beta, span.0, span.1, opts.integrator.rel_tol
    );
    let mut csv = Csv::new(&comment, "delta0,beta,fidelity");
    for (i, &d) in d_grid.iter().enumerate() {
        for (j, &b) in b_grid.iter().enumerate() {
            csv.row(&[d, b, result.at(i, j)]);
        }
    }
    write_file(opts.out, "scan.csv", &csv.text)?;
    write_file(
        opts.out,
        "scan.meta.toml",
        &scan_sidecar("scan 2d", &result.meta, &cfg.delta0, Some(&cfg.beta)),
    )?;

    let n = result.fidelity.len() as f64;
    let mean = result.fidelity.iter().sum::<f64>() / n;
    let min = result.fidelity.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = result.fidelity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("fidelity over grid: min {min:.6}, mean {mean:.6}, max {max:.6}");
    Ok(())
}

fn termination_str(t: Termination) -> &'static str {
    match t {
        Termination::BudgetExhausted => "budget-exhausted",
        Termination::Converged => "converged",
    }
}

pub fn optimize_cmd(cfg: &OptimizeConfig, opts: &RunOptions) -> Result<()> {
    let (spec, initial) = resolve_optimize(cfg)?;
    let result = optimize(&spec, &initial)?;
    write_optimize_outputs(cfg, &spec, &result, opts)?;
    println!(
        "best coefficients {:?}: coarse objective {:.6}, fine objective {:.6} \
         after {} evaluations ({})",
        result.best,
        result.best_objective,
        result.fine_objective,
        result.evaluations,
        termination_str(result.termination)
    );
    Ok(())
}

fn resolve_optimize(cfg: &OptimizeConfig) -> Result<(OptimizeSpec, Vec<f64>)> {
    let zone = match cfg.zone {
        Some(z) => Zone { delta0: (z.delta0[0], z.delta0[1]), beta: (z.beta[0], z.beta[1]) },
        // One coefficient is enough for detuning robustness alone; wider
        // searches default to a joint detuning/amplitude zone.
        None if cfg.n == 1 => Zone { delta0: (-0.6, 0.6), beta: (0.0, 0.0) },
        None => Zone { delta0: (-0.6, 0.6), beta: (-0.1, 0.1) },
    };
    let beta_degenerate = zone.beta.0 == zone.beta.1;
    let coarse = cfg.coarse.unwrap_or(if beta_degenerate { [13, 1] } else { [13, 13] });
    let fine = cfg.fine.unwrap_or(if beta_degenerate { [61, 1] } else { [25, 11] });
    let spec = OptimizeSpec {
        n: cfg.n,
        zone,
        coarse_grid: (coarse[0], coarse[1]),
        fine_grid: (fine[0], fine[1]),
        epsilon: cfg.epsilon,
        t_char: cfg.t_char,
        budget: cfg.budget,
        seed: cfg.seed,
        simplex_scale: cfg.simplex_scale,
        area_penalty: cfg
            .area_penalty
            .map(|a| res12_core::AreaPenalty { weight: a.weight, cap: a.cap }),
    };
    spec.validate()?;
    let initial = match &cfg.initial {
        Some(v) => {
            if v.len() != cfg.n {
                anyhow::bail!("initial has {} coefficients but n = {}", v.len(), cfg.n);
            }
            v.clone()
        }
        None => vec![0.0; cfg.n],
    };
    Ok((spec, initial))
}

fn write_optimize_outputs(
    cfg: &OptimizeConfig,
    spec: &OptimizeSpec,
    result: &OptimizeResult,
    opts: &RunOptions,
) -> Result<()> {
    let comment = format!(
        "optimize n={} zone=[{:?}, {:?}] coarse={:?} fine={:?} epsilon={} t_char={} \
         budget={} seed={} simplex_scale={}",
        spec.n,
        spec.zone.delta0,
        spec.zone.beta,
        spec.coarse_grid,
        spec.fine_grid,
        spec.epsilon,
        spec.t_char,
        spec.budget,
        spec.seed,
        spec.simplex_scale
    );
    let mut header = String::from("eval_index");
    for j in 1..=spec.n {
        let _ = write!(header, ",c{j}");
    }
    header.push_str(",objective");
    let mut csv = Csv::new(&comment, &header);
    for entry in &result.trace {
        let mut row = Vec::with_capacity(spec.n + 2);
        row.push(entry.index as f64);
        row.extend_from_slice(&entry.coefficients);
        row.push(entry.objective);
        csv.row(&row);
    }
    write_file(opts.out, "trace.csv", &csv.text)?;

    let mut best = String::new();
    let _ = writeln!(best, "coefficients = {:?}", result.best);
    let _ = writeln!(best, "coarse_objective = {:?}", result.best_objective);
    let _ = writeln!(best, "fine_objective = {:?}", result.fine_objective);
    let _ = writeln!(best, "evaluations = {}", result.evaluations);
    let _ = writeln!(best, "termination = {:?}", termination_str(result.termination));
    let _ = writeln!(best, "seed = {}", cfg.seed);
    write_file(opts.out, "best.toml", &best)?;
    Ok(())
}

pub fn area_cmd(cfg: &AreaConfig, _opts: &RunOptions) -> Result<()> {
    let params = cfg.params.as_params();
    let pulse = cfg.pulse.build(params)?;
    let span = crate::config::resolve_span(cfg.span, pulse.as_dyn())?;
    let area = pulse_area(pulse.as_dyn(), span)?;
    println!("pulse area over [{}, {}] = {:.6} ({:.6} pi)", span.0, span.1, area, area / PI);
    Ok(())
}
