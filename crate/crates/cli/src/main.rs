// `!(a < b)` rejects NaN alongside the ordering violation, intentionally.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Problem-file driven front end: reduces radial semilinear problems, audits
//! the analytic hypotheses, runs the solvers, and verifies solutions on a
//! discrete surface, emitting machine-readable CSV/JSON artifacts.

mod output;
mod problem;
mod run;
mod svg;

use clap::{Parser, Subcommand};
use output::{Manifest, OutputDir};
use problem::{build_geometry, CliError, CliResult};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "semilin",
    version,
    about = "Radial reductions, hypothesis audits, solvers, and verification for semilinear elliptic problems on manifolds with polar actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (default: problem.output.dir or "out")
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Solver/audit tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Override a problem-file key, e.g. --set task.tol=1e-9 (repeatable)
    #[arg(long = "set", global = true)]
    set: Vec<String>,

    /// Emit SVG line plots
    #[arg(long, global = true)]
    plots: bool,

    /// Fail if any code path requests randomness
    #[arg(long = "seed-free", global = true)]
    seed_free: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the reduced-ODE coefficients on a grid as CSV
    Reduce { problem: PathBuf },
    /// Audit the analytic hypotheses; writes audit.json
    Audit { problem: PathBuf },
    /// Solve an initial value problem (r- or s-coordinate, optionally from the pole)
    SolveIvp { problem: PathBuf },
    /// Solve the singular two-point boundary value problem by shooting
    SolveBvp { problem: PathBuf },
    /// Picard iteration on the integral representations
    SolvePicard { problem: PathBuf },
    /// Concavity-based nonexistence dichotomy
    Nonexistence { problem: PathBuf },
    /// Contraction certificate for two matched solves
    Uniqueness { problem: PathBuf },
    /// Lift a radial solution onto the surface and measure the discrete
    /// Laplace–Beltrami residual over a refinement ladder
    Verify { problem: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Reduce { .. } => "reduce",
            Command::Audit { .. } => "audit",
            Command::SolveIvp { .. } => "solve-ivp",
            Command::SolveBvp { .. } => "solve-bvp",
            Command::SolvePicard { .. } => "solve-picard",
            Command::Nonexistence { .. } => "nonexistence",
            Command::Uniqueness { .. } => "uniqueness",
            Command::Verify { .. } => "verify",
        }
    }

    fn problem_path(&self) -> &PathBuf {
        match self {
            Command::Reduce { problem }
            | Command::Audit { problem }
            | Command::SolveIvp { problem }
            | Command::SolveBvp { problem }
            | Command::SolvePicard { problem }
            | Command::Nonexistence { problem }
            | Command::Uniqueness { problem }
            | Command::Verify { problem } => problem,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.exit_code);
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    let path = cli.command.problem_path().clone();
    let (file, canonical) = problem::load(&path, &cli.set)?;

    let params: semilin::expr::Params = file.params.clone().into_iter().collect();
    let geom = build_geometry(&file, &path, &params)?;

    let out_dir = cli
        .out
        .clone()
        .or_else(|| file.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = OutputDir::create(&out_dir)?;
    let manifest = Manifest::new(cli.command.name(), &path, &canonical, &cli.set, cli.seed_free);

    let tol = cli.tol.or(file.task.tol).unwrap_or(1e-8);
    let mut manifest = manifest;
    if let Some(declared) = &file.task.kind {
        manifest.insert("declared_task", serde_json::json!(declared));
    }
    let ctx = run::Ctx {
        file,
        params,
        geom,
        out,
        manifest,
        plots: cli.plots,
        tol,
    };

    let code = match &cli.command {
        Command::Reduce { .. } => run::run_reduce(ctx)?,
        Command::Audit { .. } => run::run_audit(ctx)?,
        Command::SolveIvp { .. } => run::run_solve_ivp(ctx)?,
        Command::SolveBvp { .. } => run::run_solve_bvp(ctx)?,
        Command::SolvePicard { .. } => run::run_solve_picard(ctx)?,
        Command::Nonexistence { .. } => run::run_nonexistence(ctx)?,
        Command::Uniqueness { .. } => run::run_uniqueness(ctx)?,
        Command::Verify { .. } => run::run_verify(ctx)?,
    };

    if cli.seed_free && semilin::rng_audit::requests() > 0 {
        return Err(CliError::new(format!(
            "--seed-free: {} randomness request(s) were made during the run",
            semilin::rng_audit::requests()
        )));
    }
    Ok(code)
}
