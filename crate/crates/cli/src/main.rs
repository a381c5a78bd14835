use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use eigenacs_cli::commands::{self, with_output, SolveReport};
use eigenacs_cli::RunConfig;

#[derive(Parser)]
#[command(name = "eigenacs", version, about = "Differential eigenvalue problems by alternating convex search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single strand or a population from a JSON config.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for population strands (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the reference spectrum of a catalog problem as JSON.
    Oracle {
        problem: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Coarse grid spacing for finite-difference oracles.
        #[arg(long)]
        grid_h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time ACS against the gradient-descent baseline on one loss system.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Solve { config, out, threads } => {
            let cfg = with_output(RunConfig::from_path(&config)?, out);
            let report = commands::with_threads(threads, || commands::solve(&cfg))??;
            match report {
                SolveReport::Single(r) => writeln!(
                    stdout,
                    "{}: mu = {}, lambda = {:?}, status = {:?}, {} iterations",
                    r.problem, r.estimate.mu, r.estimate.lambda_phys, r.estimate.status, r.estimate.iterations
                )?,
                SolveReport::Population(r) => {
                    writeln!(stdout, "{}: {} modes", r.problem, r.spectrum.modes.len())?;
                    for m in &r.spectrum.modes {
                        writeln!(stdout, "  mu = {}, lambda = {:?}", m.estimate.mu, m.estimate.lambda_phys)?;
                    }
                }
            }
            writeln!(stdout, "wrote {}", cfg.output.dir.join("report.json").display())?;
        }
        Command::Oracle { problem, count, grid_h, out } => {
            let spectrum = commands::oracle(&problem, count, grid_h, out.as_deref())?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&spectrum)?)?;
        }
        Command::Compare { config, out } => {
            let cfg = with_output(RunConfig::from_path(&config)?, out);
            let r = commands::compare(&cfg)?;
            writeln!(
                    stdout,
                "{}: ACS {:.3} s (loss {:e}), GD {:.3} s (loss {:e}), speedup {:.1}x",
                r.problem, r.acs.wall_time_s, r.acs.final_loss, r.gd.wall_time_s, r.gd.final_loss, r.speedup_ratio
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe (e.g. `| head`) is not a failure
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
