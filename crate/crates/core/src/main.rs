use std::fs;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;

use composite_bandits::dump::write_env;
use composite_bandits::experiment::{fit_rows, horizon_seed, output_paths, read_rows, run_experiment, ExperimentConfig};
use composite_bandits::montecarlo::derive_seed;
use composite_bandits::{Result, SimRng};

#[derive(Parser)]
#[command(name = "composite-bandits", version, about = "Composite-loss bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a horizon sweep described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of replications per horizon.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the output prefix.
        #[arg(long)]
        out: Option<String>,
        /// Worker threads; 0 uses all cores.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Fit log-log regret exponents to a sweep CSV.
    Fit { csv: PathBuf },
    /// Write the environment of one replication as text.
    DumpEnv {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Horizon to sample; defaults to the first in the config.
        #[arg(long)]
        horizon: Option<usize>,
        /// Replication index.
        #[arg(long, default_value_t = 0)]
        rep: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            reps,
            out,
            parallelism,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(r) = reps {
                cfg.n_reps = r;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let report = run_experiment(&cfg)?;
            for row in report.rows() {
                eprintln!(
                    "T={:>8}  mean regret {:>12.4}  std {:>10.4}  switches {:>10.2}",
                    row.horizon, row.mean_regret, row.std_regret, row.mean_switches
                );
            }
            match report.fit() {
                Ok(fit) => eprintln!("slope {:.4}  intercept {:.4}", fit.slope, fit.intercept),
                Err(e) => eprintln!("no fit: {e}"),
            }
            let (csv, _, _) = output_paths(&cfg.output);
            println!("{}", csv.display());
            Ok(())
        }
        Command::Fit { csv } => {
            let rows = read_rows(&csv)?;
            println!("env,player,slope,intercept,residual,points");
            for ((env, player), fit) in fit_rows(&rows) {
                match fit {
                    Ok(f) => println!(
                        "{env},{player},{},{},{},{}",
                        f.slope,
                        f.intercept,
                        f.residual,
                        f.points.len()
                    ),
                    Err(e) => eprintln!("{env},{player}: {e}"),
                }
            }
            Ok(())
        }
        Command::DumpEnv {
            config,
            seed,
            horizon,
            rep,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let master = seed.unwrap_or(cfg.master_seed);
            let horizon = horizon.unwrap_or(cfg.horizons[0]);
            cfg.environment.validate(horizon)?;
            let rep_seed = derive_seed(horizon_seed(master, horizon), rep);
            let mut rng = SimRng::seed_from_u64(derive_seed(rep_seed, 0));
            let env = cfg.environment.build(horizon, &mut rng)?.with_seed(rep_seed);
            match out {
                Some(path) => write_env(&env, BufWriter::new(fs::File::create(path)?)),
                None => write_env(&env, BufWriter::new(io::stdout().lock())),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
