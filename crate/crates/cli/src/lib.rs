//! Command-line experiments for ontological models of qubits and qutrits.
//!
//! Each experiment reads a `key = value` config, runs the corresponding
//! estimator from [`ontolab_core`] on a rayon pool and writes a results CSV
//! plus a manifest that reloads as a config.

pub mod config;
pub mod experiments;
pub mod output;
pub mod pool;

use std::path::PathBuf;
use std::time::Instant;

use ontolab_core::engine::Engine;

pub use config::{Experiment, ExperimentConfig};
pub use output::CsvRow;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("estimation failed: {0}")]
    Runtime(#[from] ontolab_core::Error),
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), message: message.into() }
    }

    pub fn bad_value(key: &str, value: &str) -> Self {
        Self::config(key, format!("invalid value `{value}`"))
    }

    /// The offending config key, for config errors.
    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Config { key, .. } => Some(key),
            _ => None,
        }
    }

    /// 2 for config errors, 3 for estimation errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::ReadConfig { .. } => 2,
            CliError::Runtime(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

/// Runs one experiment and writes its CSV and manifest.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let rows = compute(config)?;
    output::write_csv(&config.output, &rows)?;
    let manifest = output::manifest_path(&config.output);
    output::write_manifest(&manifest, config, start.elapsed())?;
    Ok(RunSummary { csv: config.output.clone(), manifest, rows: rows.len() })
}

/// Runs one experiment without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<Vec<CsvRow>, CliError> {
    let engine = Engine::new(config.seed, pool::ThreadPool::new(config.workers)?).with_sampler(config.sampler);
    Ok(experiments::run(config, &engine)?)
}
