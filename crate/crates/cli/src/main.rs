//! res12: simulation and pulse design for the driven 1:2-resonance
//! two-level model. Each subcommand reads an optional TOML config, runs the
//! computation and drops CSV/TOML artifacts into the output directory.
// Guards are written `!(x > 0.0)` on purpose: the negated form also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use output::RunOptions;
use res12_core::IntegratorConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "res12", version, about = "Pulse design toolkit for the 1:2-resonance model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the amplitude equations under a pulse and export the
    /// trajectory.
    Simulate(CommonArgs),
    /// Construct control pulses and export their field profiles.
    Design {
        #[command(subcommand)]
        which: DesignCmd,
    },
    /// Export the frozen-field phase portrait: fixed points, separatrix,
    /// constant-energy contours.
    Portrait(CommonArgs),
    /// Map final-state fidelity over control-error grids.
    Scan {
        #[command(subcommand)]
        which: ScanCmd,
    },
    /// Search phase-series coefficients for the best zone-averaged fidelity.
    Optimize(CommonArgs),
    /// Print the time-integrated pulse area.
    Area(CommonArgs),
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Self-tracking sech/tanh sweep pulse.
    Adiabatic(CommonArgs),
    /// Error-compensating pulse shaped from a phase-series ansatz.
    Robust(CommonArgs),
}

#[derive(Subcommand)]
enum ScanCmd {
    /// Fidelity versus static detuning offset.
    #[command(name = "1d")]
    OneD(CommonArgs),
    /// Fidelity over the detuning-offset / amplitude-error plane.
    #[command(name = "2d")]
    TwoD(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; defaults reproduce the reference setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Number of sample points along exported curves.
    #[arg(long)]
    samples: Option<usize>,
    /// Integrator tolerance (sets both relative and absolute).
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for scans (overrides RES12_JOBS; default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn run_options(&self) -> RunOptions<'_> {
        let mut integrator = IntegratorConfig::default();
        if let Some(tol) = self.tol {
            integrator.rel_tol = tol;
            integrator.abs_tol = tol;
        }
        RunOptions { out: &self.out, samples: self.samples.unwrap_or(401), integrator }
    }
}

/// Fix the rayon pool size before any parallel work: the --jobs flag wins,
/// then the RES12_JOBS environment variable, otherwise rayon's default.
fn init_workers(jobs: Option<usize>) -> Result<()> {
    let n = match jobs {
        Some(n) => Some(n),
        None => match std::env::var("RES12_JOBS") {
            Ok(s) => {
                Some(s.parse::<usize>().with_context(|| {
                    format!("RES12_JOBS must be a positive integer, got {s:?}")
                })?)
            }
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            anyhow::bail!("worker count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("worker pool already initialized")?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::Simulate(a) | Cmd::Portrait(a) | Cmd::Optimize(a) | Cmd::Area(a) => a,
        Cmd::Design { which: DesignCmd::Adiabatic(a) | DesignCmd::Robust(a) } => a,
        Cmd::Scan { which: ScanCmd::OneD(a) | ScanCmd::TwoD(a) } => a,
    };
    init_workers(common.jobs)?;
    let opts = common.run_options();
    let path = common.config.as_deref();
    match &cli.cmd {
        Cmd::Simulate(_) => output::simulate(&config::load(path)?, &opts),
        Cmd::Design { which: DesignCmd::Adiabatic(_) } => {
            output::design_adiabatic(&config::load(path)?, &opts)
        }
        Cmd::Design { which: DesignCmd::Robust(_) } => {
            output::design_robust(&config::load(path)?, &opts)
        }
        Cmd::Portrait(_) => output::portrait_cmd(&config::load(path)?, &opts),
        Cmd::Scan { which: ScanCmd::OneD(_) } => output::scan_1d_cmd(&config::load(path)?, &opts),
        Cmd::Scan { which: ScanCmd::TwoD(_) } => output::scan_2d_cmd(&config::load(path)?, &opts),
        Cmd::Optimize(_) => output::optimize_cmd(&config::load(path)?, &opts),
        Cmd::Area(_) => output::area_cmd(&config::load(path)?, &opts),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
