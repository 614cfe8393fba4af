use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnet::run::{self, SolveOptions};
use qnet::{parse_config, CliError, RunConfig};

/// Exact stationary analysis of GI/M/c and GI^X/M/c/N queues.
#[derive(Parser)]
#[command(name = "qnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one or more configs and write the requested outputs.
    Solve {
        /// Config file; repeat to solve several.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Round decimals to this many places (half-even).
        #[arg(long)]
        round: Option<usize>,
        /// Also write the transition matrix.
        #[arg(long)]
        dump_matrix: bool,
        /// Worker threads for several configs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Discrete-event simulation of the configured model.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        round: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Solve and simulate, then report the largest gap in standard errors.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        round: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    config: PathBuf,
    /// Total arrivals, warm-up included (defaults to the config).
    #[arg(long)]
    arrivals: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Batch-means batches.
    #[arg(long)]
    batches: Option<usize>,
}

fn fail(stem: &str, e: &CliError) -> i32 {
    eprintln!("qnet: {stem}: {e}");
    e.exit_code()
}

fn load(path: &PathBuf) -> Result<RunConfig, CliError> {
    parse_config(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { config, round, dump_matrix, jobs, out_dir } => {
            let opts = SolveOptions { round, dump_matrix };
            let results = run::fan_out(&config, jobs, |path| {
                let cfg = load(path)?;
                run::run_solve(&cfg, &opts, &out_dir)
            });
            let mut code = 0;
            for (path, r) in config.iter().zip(results) {
                match r {
                    Ok(line) => println!("{line}"),
                    Err(e) => {
                        let c = fail(&path.display().to_string(), &e);
                        if code == 0 {
                            code = c;
                        }
                    }
                }
            }
            code
        }
        Command::Simulate { sim, round, out_dir } => {
            let r = load(&sim.config).and_then(|cfg| {
                let s = run::simulation_settings(&cfg, sim.arrivals, sim.seed, sim.batches)?;
                run::run_simulate(&cfg, s, round, &out_dir)
            });
            match r {
                Ok(line) => {
                    println!("{line}");
                    0
                }
                Err(e) => fail(&sim.config.display().to_string(), &e),
            }
        }
        Command::Compare { sim, round, out_dir } => {
            let r = load(&sim.config).and_then(|cfg| {
                let s = run::simulation_settings(&cfg, sim.arrivals, sim.seed, sim.batches)?;
                run::run_compare(&cfg, s, round, &out_dir)
            });
            match r {
                Ok(line) => {
                    println!("{line}");
                    0
                }
                Err(e) => fail(&sim.config.display().to_string(), &e),
            }
        }
    };
    ExitCode::from(code as u8)
}
