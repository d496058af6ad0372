use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pfsim_core::driver::{self, RunError, RunOptions};
use pfsim_core::scene::SceneConfig;
use pfsim_core::validation::{self, ValidationError, SUITES};

/// Exit status for a finished run or a passing validation suite.
const EXIT_OK: u8 = 0;
/// Exit status for an aborted step, an I/O failure or a failing suite.
const EXIT_FAILED: u8 = 1;
/// Exit status for an unreadable or invalid scene, or an unknown suite.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "pfsim", version, about = "Penetration-free elastodynamics with contact")]
struct Cli {
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a JSON scene, writing OBJ frames and CSV logs.
    Run {
        scene: PathBuf,
        /// Number of steps, overriding the scene file.
        #[arg(long)]
        frames: Option<usize>,
        /// Seed for vertex jitter, overriding the scene file.
        #[arg(long)]
        seed: Option<u64>,
        /// Write a surface frame every N steps (0 writes none).
        #[arg(long, default_value_t = 1)]
        dump_every: usize,
        /// Output directory, overriding the scene file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a built-in validation suite and write its CSV tables.
    Validate {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value = "validation")]
        output: PathBuf,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn run_scene(
    path: &Path,
    frames: Option<usize>,
    seed: Option<u64>,
    dump_every: usize,
    output: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = SceneConfig::load(path).map_err(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut scene = cfg.build(base).map_err(config)?;
    let opts = RunOptions {
        frames: frames.unwrap_or(cfg.frames),
        dump_every,
        output: output.unwrap_or_else(|| base.join(&cfg.output)),
    };
    log::info!(
        "{}: {} vertices, {} tets, {} steps into {}",
        path.display(),
        scene.sim.mesh.num_vertices(),
        scene.sim.mesh.tets.len(),
        opts.frames,
        opts.output.display()
    );
    let summary = driver::run(&mut scene, &opts).map_err(|e| match e {
        RunError::Step { .. } => runtime(anyhow::Error::new(e).context("simulation aborted")),
        RunError::Io(_) => runtime(e),
    })?;
    println!(
        "{} steps, {} outer iterations, {} Newton iterations, peak {} constraints, {} frame files in {}",
        summary.frames,
        summary.outer_iterations,
        summary.newton_iterations,
        summary.peak_constraints,
        summary.frame_files,
        opts.output.display()
    );
    Ok(())
}

fn validate(suite: &str, output: &Path) -> Result<bool, Failure> {
    let report = validation::run_suite(suite).map_err(|e| match e {
        ValidationError::UnknownSuite(_) => config(e),
        ValidationError::Scene(_) => runtime(e),
    })?;
    println!("{}", report.summary());
    report
        .write_tables(output)
        .with_context(|| format!("writing tables to {}", output.display()))
        .map_err(Failure::Runtime)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(EXIT_FAILED);
    }
    let result = match cli.command {
        Command::Run {
            scene,
            frames,
            seed,
            dump_every,
            output,
        } => run_scene(&scene, frames, seed, dump_every, output).map(|()| true),
        Command::Validate { suite, output } => validate(&suite, &output),
    };
    match result {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
