//! Experiment execution: dispatches every (dataset, variant, run) job to a
//! worker pool, gathers the reports, backfills IGD and builds the metric
//! tables.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use lmsss::pipeline::{run_variant, RunReport, Variant};
use lmsss::seed;
use lmsss::stats::{compute_igd, tabulate, Metric, Table};

use crate::config::ExperimentConfig;

/// Significance level for the comparison marks.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<RunReport>,
    pub tables: Vec<Table>,
    pub reference: Variant,
}

/// Split seed for one (dataset, run) pair: depends on the base seed, the
/// dataset name and the run index, never on the variant, so every variant of
/// a run index sees the identical train/test partition.
pub fn run_seed(base_seed: u64, dataset_name: &str, run_index: usize) -> u64 {
    seed::mix(seed::mix_str(base_seed, dataset_name), run_index as u64)
}

/// Runs the whole experiment on `threads` workers (0 = one per logical
/// core). Reports come back in (dataset, run, variant) order regardless of
/// scheduling; IGD is computed against per-dataset reference fronts merged
/// over all variants' runs.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    base: &Path,
    base_seed: u64,
    threads: usize,
) -> Result<ExperimentOutcome> {
    let pipeline = cfg.pipeline_config()?;
    let variants = cfg.parsed_variants();

    let mut datasets = Vec::with_capacity(cfg.datasets.len());
    for spec in &cfg.datasets {
        datasets.push((spec.name.clone(), spec.materialize(base)?));
    }

    let mut jobs = Vec::new();
    for (dataset_index, (name, _)) in datasets.iter().enumerate() {
        for run_index in 0..cfg.runs {
            let split_seed = run_seed(base_seed, name, run_index);
            for &variant in &variants {
                jobs.push((dataset_index, run_index, split_seed, variant));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    let mut reports: Vec<RunReport> = pool.install(|| {
        jobs.par_iter()
            .map(|&(dataset_index, run_index, split_seed, variant)| {
                let (name, data) = &datasets[dataset_index];
                run_variant(variant, data, name, run_index, split_seed, &pipeline).map_err(|e| {
                    anyhow::anyhow!(
                        "run failed: dataset {name:?}, variant {variant}, seed {split_seed}: {e}"
                    )
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    compute_igd(&mut reports).context("computing IGD against merged reference fronts")?;

    let reference = if variants.contains(&Variant::Lmsss) {
        Variant::Lmsss
    } else {
        variants[0]
    };
    // Significance marks need at least 5 runs per side; below that only the
    // per-run outputs are produced.
    let tables = if variants.len() >= 2 && cfg.runs >= 5 {
        Metric::ALL
            .into_iter()
            .map(|metric| tabulate(&reports, metric, reference, ALPHA))
            .collect::<lmsss::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok(ExperimentOutcome {
        reports,
        tables,
        reference,
    })
}
