//! Command implementations behind the `tumorctl` binary.
//!
//! Each command ingests a TOML configuration (all keys optional, defaults
//! reproduce the built-in 28-day therapy preset), validates it into a
//! scenario, runs the requested computation, and writes deterministic
//! plain-text outputs plus a `run-manifest.toml` echoing every effective
//! parameter.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand::rngs::StdRng;
use std::fs;
use std::path::{Path, PathBuf};
use tumorctl_core::config::{Config, Scenario, SeedControl};
use tumorctl_core::error::Error as CoreError;
use tumorctl_core::mesh::Control;
use tumorctl_core::optimizer::{self, StopReason};
use tumorctl_core::export;
use tumorctl_core::params;

/// Exit code when the divergence guard aborts the descent.
pub const EXIT_DIVERGED: i32 = 2;
/// Exit code when the feasibility condition fails (and is not overridden).
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "tumorctl",
    about = "Reaction-diffusion tumor therapy model: simulation and dose-schedule optimization",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Forward-solve the model for a dosing schedule and export the traces.
    Simulate(SimulateArgs),
    /// Run the projected gradient descent on the penalized objective.
    Optimize(OptimizeArgs),
    /// Compare the adjoint gradient against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Evaluate the constant-control feasibility condition.
    Feasibility(CommonArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// TOML configuration file; unspecified keys take preset defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset supplying the defaults.
    #[arg(long, default_value = "paper-sec6", value_parser = ["paper-sec6"])]
    pub preset: String,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Dosing schedule to simulate.
    #[arg(long, value_enum, default_value_t = Seed::Dosing)]
    pub seed_control: Seed,
    /// Comma-separated snapshot times in days (overrides the config).
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Initial control for the descent.
    #[arg(long, value_enum, default_value_t = Seed::Dosing)]
    pub seed_control: Seed,
    /// Run even if the constant-control feasibility condition fails.
    #[arg(long)]
    pub allow_infeasible: bool,
    /// Comma-separated snapshot times in days (overrides the config).
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Control at which the gradient is checked. Each direction costs two
    /// extra forward solves, so coarse grids are recommended.
    #[arg(long, value_enum, default_value_t = Seed::Dosing)]
    pub seed_control: Seed,
    /// Random perturbation directions.
    #[arg(long, default_value_t = 5)]
    pub directions: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub fd_step: f64,
    /// Optional directory for a control/gradient CSV dump.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Seed {
    /// No dosing.
    Zero,
    /// The periodic schedule from the `[dosing]` section.
    Dosing,
    /// The guaranteed-feasible constant control.
    ConstantFeasible,
}

impl From<Seed> for SeedControl {
    fn from(s: Seed) -> SeedControl {
        match s {
            Seed::Zero => SeedControl::Zero,
            Seed::Dosing => SeedControl::Dosing,
            Seed::ConstantFeasible => SeedControl::ConstantFeasible,
        }
    }
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Feasibility(args) => cmd_feasibility(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<Config> {
    match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            Ok(Config::from_toml_str(&text)?)
        }
        None => Ok(Config::paper_sec6()),
    }
}

/// Worker-thread count from the environment (the only environment variable
/// the tool reads).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("TUMORCTL_THREADS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .with_context(|| format!("TUMORCTL_THREADS must be a positive integer, got {v:?}"))?;
            anyhow::ensure!(n >= 1, "TUMORCTL_THREADS must be at least 1");
            Ok(n)
        }
        Err(_) => Ok(1),
    }
}

fn build_scenario(common: &CommonArgs, snapshot_times: &Option<Vec<f64>>) -> Result<(Config, Scenario)> {
    let mut config = load_config(common)?;
    if let Some(times) = snapshot_times {
        config.output.snapshot_days = times.clone();
    }
    let threads = threads_from_env()?;
    let scenario = config.build(threads)?;
    Ok((config, scenario))
}

fn write_manifest(out: &Path, config: &Config) -> Result<()> {
    let normalized = config.normalized()?;
    fs::write(out.join("run-manifest.toml"), normalized.to_toml_string())?;
    Ok(())
}

fn write_snapshots(
    out: &Path,
    scenario: &Scenario,
    states: &[tumorctl_core::Field],
) -> Result<Vec<(f64, usize)>> {
    let mut written = Vec::new();
    for &node in &scenario.snapshot_nodes {
        let t = scenario.mesh.t(node);
        let field = &states[node];
        fs::write(out.join(format!("y_d{t}.txt")), export::field_matrix(field))?;
        fs::write(
            out.join(format!("y_d{t}.vtk")),
            export::field_vtk(&scenario.grid, field, "tumor_density"),
        )?;
        written.push((t, node));
    }
    Ok(written)
}

fn write_cross_section(
    out: &Path,
    scenario: &Scenario,
    states: &[tumorctl_core::Field],
) -> Result<()> {
    let snaps: Vec<(f64, &tumorctl_core::Field)> = scenario
        .snapshot_nodes
        .iter()
        .map(|&n| (scenario.mesh.t(n), &states[n]))
        .collect();
    fs::write(
        out.join("cross_section.csv"),
        export::cross_section_csv(&scenario.grid, &snaps),
    )?;
    Ok(())
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let (config, scenario) = build_scenario(&args.common, &args.snapshot_times)?;
    fs::create_dir_all(&args.out)?;
    let u = scenario.seed_control(args.seed_control.into())?;
    let run = scenario.problem().forward(&u)?;

    fs::write(
        args.out.join("s.csv"),
        export::s_csv(&scenario.mesh, &run.s, &scenario.params),
    )?;
    fs::write(args.out.join("u.csv"), export::u_csv(&scenario.mesh, &u))?;
    write_cross_section(&args.out, &scenario, &run.states)?;
    let snaps = write_snapshots(&args.out, &scenario, &run.states)?;
    write_manifest(&args.out, &config)?;

    println!(
        "simulated {} steps on a {}x{} grid; wrote s.csv, u.csv, cross_section.csv and {} snapshots to {}",
        scenario.mesh.nt(),
        scenario.grid.nx(),
        scenario.grid.ny(),
        snaps.len(),
        args.out.display()
    );
    Ok(0)
}

pub fn cmd_optimize(args: OptimizeArgs) -> Result<i32> {
    let (config, scenario) = build_scenario(&args.common, &args.snapshot_times)?;

    let report = params::check_feasibility(&scenario.params);
    if !report.feasible && !args.allow_infeasible {
        eprintln!(
            "feasibility condition fails: (1 - e^(-M0 T)) / (1 - e^(-M0 t0)) * s_minus = {:.6} > s_plus = {:.6}; \
             no constant control satisfies both concentration bounds (use --allow-infeasible to run anyway)",
            report.lhs, report.rhs
        );
        return Ok(EXIT_INFEASIBLE);
    }

    fs::create_dir_all(&args.out)?;
    let u0 = scenario.seed_control(args.seed_control.into())?;

    // Stream iterate records as the run progresses.
    let iterates_path = args.out.join("iterates.csv");
    fs::write(&iterates_path, export::ITERATES_HEADER)?;
    let stream = std::cell::RefCell::new(
        fs::OpenOptions::new()
            .append(true)
            .open(&iterates_path)?,
    );

    let problem = scenario.problem();
    let outcome = optimizer::run(&problem, u0, scenario.clamp_nonnegative, |rec| {
        use std::io::Write;
        let mut f = stream.borrow_mut();
        let _ = f.write_all(export::iterate_row(rec).as_bytes());
        let _ = f.flush();
    });

    let result = match outcome {
        Ok(r) => r,
        Err(CoreError::Diverged { at_iter, streak }) => {
            eprintln!(
                "descent aborted: objective increased {streak} consecutive times at iteration {at_iter}; \
                 the gradient step delta is too large for this configuration"
            );
            write_manifest(&args.out, &config)?;
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e.into()),
    };

    // Re-solve the returned (best) control for export.
    let run = problem.forward(&result.control)?;
    fs::write(
        args.out.join("s.csv"),
        export::s_csv(&scenario.mesh, &run.s, &scenario.params),
    )?;
    fs::write(
        args.out.join("u.csv"),
        export::u_csv(&scenario.mesh, &result.control),
    )?;
    write_cross_section(&args.out, &scenario, &run.states)?;
    write_snapshots(&args.out, &scenario, &run.states)?;
    write_manifest(&args.out, &config)?;

    let last = result.records.last().expect("records nonempty");
    println!(
        "optimization stopped after {} iterations ({}); best iterate k={} with J_eps = {:.6}, \
         max violations upper {:.4} lower {:.4}; outputs in {}",
        result.records.len() - 1,
        match result.reason {
            StopReason::SmallDecrease => "objective decrease below tolerance",
            StopReason::MaxIters => "iteration budget reached",
        },
        result.best_k,
        last.j_eps,
        last.max_violation_upper,
        last.max_violation_lower,
        args.out.display()
    );
    Ok(0)
}

pub fn cmd_gradcheck(args: GradcheckArgs) -> Result<i32> {
    let (_, scenario) = build_scenario(&args.common, &None)?;
    let u = scenario.seed_control(args.seed_control.into())?;
    let problem = scenario.problem();

    let mut rng = StdRng::seed_from_u64(7);
    let dirs: Vec<Control> = (0..args.directions.max(1))
        .map(|_| {
            Control::new(
                (0..scenario.mesh.nt())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
        })
        .collect();

    let errors = problem.gradient_check(&u, &dirs, args.fd_step)?;
    for (i, e) in errors.iter().enumerate() {
        println!("direction {i}: relative error {e:.3e}");
    }
    let max = errors.iter().cloned().fold(0.0f64, f64::max);
    println!("max relative FD-vs-adjoint gradient error: {max:.3e}");

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        let eval = problem.evaluate(&u)?;
        fs::write(
            out.join("gradient.csv"),
            export::gradient_csv(&scenario.mesh, &u, &eval.gradient),
        )?;
    }

    Ok(if max <= 1e-3 { 0 } else { 1 })
}

pub fn cmd_feasibility(common: CommonArgs) -> Result<i32> {
    let config = load_config(&common)?;
    let scenario = config.build(threads_from_env()?)?;
    let report = params::check_feasibility(&scenario.params);
    println!(
        "(1 - e^(-M0 T)) / (1 - e^(-M0 t0)) * s_minus = {:.6}",
        report.lhs
    );
    println!("s_plus = {:.6}", report.rhs);
    if report.feasible {
        println!("feasible: a constant control satisfies both concentration bounds");
        let mesh = &scenario.mesh;
        let u = params::reference_constant_control(&scenario.params, mesh)?;
        println!("reference constant control: u = {:.6} per day", u.values()[0]);
        Ok(0)
    } else {
        println!("infeasible: no constant control satisfies both concentration bounds");
        Ok(EXIT_INFEASIBLE)
    }
}
