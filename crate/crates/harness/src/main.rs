use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pilotforge::validate::{run_suite, SuiteSize};
use pilotforge::{run_experiment, Algorithm, ExperimentSpec, HarnessError};

/// Coordinated uplink pilot design experiments.
#[derive(Parser)]
#[command(name = "pilotforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run over a list of pilot lengths.
    Sweep {
        /// Comma-separated pilot lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<usize>,
        /// Config file; built-in defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check closed forms against Monte Carlo oracles.
    Validate {
        /// Draws for the MSE checks.
        #[arg(long, default_value_t = 10_000)]
        mse_draws: usize,
        /// Draws for the rate check.
        #[arg(long, default_value_t = 100_000)]
        rate_draws: usize,
    },
}

#[derive(Args)]
struct Overrides {
    /// Replaces the configured algorithm list (repeatable).
    #[arg(long = "algo", value_enum)]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, spec: &mut ExperimentSpec) {
        if !self.algorithms.is_empty() {
            spec.algorithms = self.algorithms;
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
            spec.network.seed = s;
        }
        if let Some(o) = self.out {
            spec.output = o;
        }
    }
}

fn experiment(mut spec: ExperimentSpec, overrides: Overrides) -> Result<(), HarnessError> {
    overrides.apply(&mut spec);
    spec.network.pilot_length = spec.taus.iter().copied().max().unwrap_or(1);
    spec.validate()?;
    let results = run_experiment(&spec)?;
    println!(
        "{} rows written to {}",
        results.rows.len(),
        spec.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => ExperimentSpec::load(&config)
            .map_err(HarnessError::from)
            .and_then(|spec| experiment(spec, overrides)),
        Command::Sweep {
            tau,
            config,
            overrides,
        } => {
            let spec = match config {
                Some(path) => ExperimentSpec::load(&path).map_err(HarnessError::from),
                None => Ok(ExperimentSpec::default()),
            };
            spec.and_then(|mut spec| {
                spec.taus = tau;
                experiment(spec, overrides)
            })
        }
        Command::Validate {
            mse_draws,
            rate_draws,
        } => {
            let checks = run_suite(SuiteSize {
                mse_draws,
                rate_draws,
            });
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            return if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
