use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use privfl::experiments::{self, ExperimentConfig};
use privfl::mnist::{self, MnistConfig};
use privfl::trainer;

/// Private federated gradient descent over simulated fading channels.
#[derive(Debug, Parser)]
#[command(name = "privfl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo realizations, overriding the configuration.
    #[arg(long)]
    realizations: Option<usize>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train once and write the per-iteration trace.
    Run(Common),
    /// Sweep one parameter over a grid and write mean and standard error of the final normalized gap.
    Sweep(Common),
    /// Report the epsilon and SNR above/below which privacy costs nothing.
    Threshold(Common),
    /// Audit a trace file against its privacy budget.
    Verify {
        /// Trace CSV written by `run`.
        trace: PathBuf,
    },
    /// Digit classification study: training loss and test error against the block budget.
    Mnist(Common),
    /// Print the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Show the digit-classification configuration instead.
        #[arg(long)]
        mnist: bool,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default().resolved(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = common.realizations {
        config.realizations = Some(n);
    }
    config.validate()?;
    Ok(config)
}

fn mnist_config(common: &Common) -> Result<MnistConfig> {
    let mut config = match &common.config {
        Some(path) => MnistConfig::from_file(path)?,
        None => MnistConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = common.realizations {
        config.realizations = n;
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let config = experiment_config(&common)?;
            let problem = experiments::build_problem(&config)?;
            let trace = trainer::run(&config.train_config()?, &problem)?;
            experiments::write_trace_csv(&trace, output(common.out.as_deref())?)?;
            if let Some(gap) = problem.optimum.as_ref().and_then(|o| trace.final_normalized_gap(o)) {
                eprintln!("final normalized gap {gap:e}");
            }
            if let Some(bound) = trace.bound {
                eprintln!("convergence bound {bound:e}");
            }
            eprintln!("power clips {}", trace.power_clips);
        }
        Command::Sweep(common) => {
            let config = experiment_config(&common)?;
            if config.axis.is_none() {
                bail!("sweep needs `axis` and `grid` in the configuration");
            }
            let rows = experiments::run_sweep(&config)?;
            experiments::write_sweep_csv(&rows, output(common.out.as_deref())?)?;
        }
        Command::Threshold(common) => {
            let config = experiment_config(&common)?;
            let problem = experiments::build_problem(&config)?;
            let rows = experiments::threshold_report(&config, &problem)?;
            experiments::write_threshold_csv(&rows, output(common.out.as_deref())?)?;
        }
        Command::Verify { trace } => {
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let report = experiments::verify_trace(io::BufReader::new(file))?;
            println!(
                "devices {} iterations {} budget {} worst slack {:e} ledger {}",
                report.devices,
                report.iterations,
                report.budget,
                report.worst_slack,
                if report.ledger_agrees { "consistent" } else { "inconsistent" }
            );
            println!("{}", if report.passed() { "PASS" } else { "FAIL" });
            return Ok(report.passed());
        }
        Command::Mnist(common) => {
            let config = mnist_config(&common)?;
            let (train, test) = mnist::load(&config)?;
            let rows = mnist::run_mnist(&config, train, &test)?;
            mnist::write_mnist_csv(&rows, output(common.out.as_deref())?)?;
        }
        Command::Config { config, mnist } => {
            let text = match (mnist, config) {
                (false, Some(p)) => ExperimentConfig::from_file(&p)?.to_toml(),
                (false, None) => ExperimentConfig::default().to_toml(),
                (true, Some(p)) => MnistConfig::from_file(&p)?.to_toml(),
                (true, None) => MnistConfig::default().to_toml(),
            };
            print!("{text}");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
