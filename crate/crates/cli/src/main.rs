//! Command-line driver: solve, perturb, chain, verify, trace, puzzle, render and reproduce.

mod commands;
mod fig5;
mod input;
mod record;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cubic_dendrite::config::DEFAULT_TOL;
use cubic_dendrite::rays::RayOptions;

use crate::input::{FileSettings, Precision, Settings};
use crate::record::Record;

#[derive(Parser, Debug)]
#[command(name = "cubic-dendrite", version, about = "Cubic polynomials with wandering branching points")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Residual tolerance for Newton solves.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Scalar type for the algebraic solvers.
    #[arg(long, global = true, value_enum)]
    precision: Option<Precision>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for written files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON objects instead of key:value records.
    #[arg(long, global = true)]
    json: bool,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Landing tolerance for ray tracing.
    #[arg(long, global = true)]
    landing_tol: Option<f64>,
    /// Ray nodes per tripling of the potential.
    #[arg(long, global = true)]
    substeps: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for a (k, l)-configuration starting from a polynomial.
    SolveConfig(commands::SolveArgs),
    /// Perturb a (k, l)-configuration into an (m+l, k+l)-configuration.
    Perturb(commands::PerturbArgs),
    /// Build the chain f0, ..., fN.
    Chain(commands::ChainArgs),
    /// Check membership, configuration and admissibility of a polynomial.
    Verify(commands::VerifyArgs),
    /// Trace one external ray.
    TraceRay(commands::TraceArgs),
    /// Landing points of several external rays.
    Landing(commands::LandingArgs),
    /// Build the puzzle and write its pieces.
    Puzzle(commands::PuzzleArgs),
    /// Render the filled Julia set to a PPM image.
    Render(commands::RenderArgs),
    /// Rebuild the first three perturbations and compare with the published coefficients.
    ReproduceFig5,
    /// Sample the loop approximating the Julia set.
    Loop(commands::LoopArgs),
    /// Locate the nodal point separating the test angles, exactly and on the loop.
    Nodal(commands::NodalArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveConfig(_) => "solve-config",
            Command::Perturb(_) => "perturb",
            Command::Chain(_) => "chain",
            Command::Verify(_) => "verify",
            Command::TraceRay(_) => "trace-ray",
            Command::Landing(_) => "landing",
            Command::Puzzle(_) => "puzzle",
            Command::Render(_) => "render",
            Command::ReproduceFig5 => "reproduce-fig5",
            Command::Loop(_) => "loop",
            Command::Nodal(_) => "nodal",
        }
    }
}

fn settings(g: &GlobalArgs) -> cubic_dendrite::Result<Settings> {
    let file = match &g.config {
        Some(p) => FileSettings::load(p)?,
        None => FileSettings::default(),
    };
    let defaults = RayOptions::default();
    Ok(Settings {
        tol: g.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
        precision: g.precision.or(file.precision).unwrap_or(Precision::Double),
        threads: g.threads.or(file.threads),
        out: g.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        json: g.json || file.json.unwrap_or(false),
        rays: RayOptions {
            substeps: g.substeps.or(file.substeps).unwrap_or(defaults.substeps),
            landing_tolerance: g.landing_tol.or(file.landing_tol).unwrap_or(defaults.landing_tolerance),
            far_potential: file.far_potential.unwrap_or(defaults.far_potential),
        },
    })
}

/// Exit status: 0 when every check passed, 1 on a failed check, 2 on a pipeline error.
const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let started = Instant::now();
    let mut out = commands::Output::default();
    let outcome = settings(&cli.global).and_then(|s| {
        if let Some(n) = s.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
                .map_err(|e| cubic_dendrite::Error::InvalidArgument(e.to_string()))?;
        }
        out.json = s.json;
        commands::run(&cli.command, &s, &mut out)
    });
    let (status, code) = match &outcome {
        Ok(()) if out.failed => ("fail", EXIT_FAIL),
        Ok(()) => ("pass", 0),
        Err(e) => {
            out.emit(Record::new("error").str("command", name).str("message", e.to_string()));
            ("error", EXIT_ERROR)
        }
    };
    out.emit(Record::new("status").str("command", name).str("status", status));
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for line in &out.lines {
        let _ = writeln!(lock, "{line}");
    }
    // timings vary between runs, so they stay off stdout
    let timing = Record::new("timing")
        .str("command", name)
        .num("seconds", started.elapsed().as_secs_f64());
    eprintln!("{}", if out.json { timing.to_json() } else { timing.to_text() });
    if let Err(e) = outcome {
        eprintln!("error: {e}");
    }
    ExitCode::from(code)
}
