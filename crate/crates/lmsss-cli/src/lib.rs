//! Library surface of the command-line harness, exposed so integration
//! tests can drive experiments without spawning processes.

pub mod config;
pub mod experiment;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::ExperimentConfig;
use crate::experiment::{run_experiment, ExperimentOutcome};

/// Overrides for `run`: command-line flags beat environment variables beat
/// the config file. Only the output directory and the thread count can come
/// from the environment (`LMSSS_OUTPUT_DIR`, `LMSSS_THREADS`).
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn effective_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("LMSSS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0) // rayon: one worker per logical core
}

pub fn effective_output_dir(flag: Option<PathBuf>, from_config: &Path) -> PathBuf {
    flag.or_else(|| std::env::var("LMSSS_OUTPUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| from_config.to_path_buf())
}

/// Loads a config, runs the experiment and writes every output file.
/// Returns the outcome and the directory written to.
pub fn execute_run(config_path: &Path, overrides: &RunOverrides) -> Result<(ExperimentOutcome, PathBuf)> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let base_seed = overrides.seed.unwrap_or(cfg.base_seed);
    let threads = effective_threads(overrides.threads);
    let output_dir = effective_output_dir(overrides.output_dir.clone(), &base.join(&cfg.output_dir));

    let outcome = run_experiment(&cfg, &base, base_seed, threads)?;

    std::fs::create_dir_all(&output_dir)
        .with_context(|| format!("creating output directory {}", output_dir.display()))?;
    output::write_reports(&output_dir, &outcome.reports)?;
    output::write_tables(&output_dir, &outcome.tables)?;
    output::write_fronts(&output_dir, &outcome.reports)?;
    output::write_timing(&output_dir, &outcome.reports)?;
    Ok((outcome, output_dir))
}
