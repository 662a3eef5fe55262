use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ontolab::config::{parse_config, SEED_ENV};
use ontolab::{CliError, Experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "ontolab", version, about = "Monte Carlo experiments on ontological qubit and qutrit models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Born-rule comparison over a θ grid.
    BornSweep(RunArgs),
    /// Deviation score over a Δ grid; picks the best Δ.
    DeltaOpt(RunArgs),
    /// Fraction of unfaithful ontic states.
    Contextuality(RunArgs),
    /// Repeat frequency of a measurement after the update rule.
    Repeatability(RunArgs),
    /// Outcome statistics of a measurement chain.
    Sequential(RunArgs),
    /// Marble-world green frequencies next to ks-qubit outcome frequencies.
    MarbleCheck(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config and ONTOLAB_SEED).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_samples: Option<u64>,
    /// Support parameter; accepts forms like `1/sqrt(3)`.
    #[arg(long)]
    delta: Option<String>,
    /// Results CSV path; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn resolve(experiment: Experiment, args: RunArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig { path: path.clone(), source })?;
            parse_config(&text)?
        }
        None => Default::default(),
    };
    let mut overrides = Vec::new();
    if let Some(s) = args.seed {
        overrides.push(("seed", s.to_string()));
    }
    if let Some(n) = args.n_samples {
        overrides.push(("n_samples", n.to_string()));
    }
    if let Some(d) = args.delta {
        overrides.push(("delta", d));
    }
    if let Some(o) = args.out {
        overrides.push(("output", o.display().to_string()));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers", w.to_string()));
    }
    let env_seed = std::env::var(SEED_ENV).ok();
    ExperimentConfig::resolve(experiment, file, &overrides, env_seed.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::BornSweep(a) => (Experiment::BornSweep, a),
        Command::DeltaOpt(a) => (Experiment::DeltaOpt, a),
        Command::Contextuality(a) => (Experiment::Contextuality, a),
        Command::Repeatability(a) => (Experiment::Repeatability, a),
        Command::Sequential(a) => (Experiment::Sequential, a),
        Command::MarbleCheck(a) => (Experiment::MarbleCheck, a),
    };
    let result = resolve(experiment, args).and_then(|config| ontolab::run(&config));
    match result {
        Ok(summary) => {
            println!("wrote {} rows to {}", summary.rows, summary.csv.display());
            println!("manifest: {}", summary.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
