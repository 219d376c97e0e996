use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lmsss::dataset::{self, CsvOptions, LabelColumn};
use lmsss::ea::{CrossoverOp, EAConfig, InitScheme};
use lmsss::seed;
use lmsss::shrink::{shrink, ShrinkConfig};
use lmsss_cli::{execute_run, output, RunOverrides};

/// Multi-objective evolutionary feature selection with search-space
/// shrinking: experiment runner, standalone shrinking and dataset tools.
#[derive(Parser)]
#[command(name = "lmsss", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run(RunArgs),
    /// Run the shrinking phase alone on a CSV dataset and write the shrunk
    /// space with its MIC/frequency scores.
    Shrink(ShrinkArgs),
    /// Generate a synthetic dataset with known informative columns.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file.
    config: PathBuf,
    /// Worker threads (default: logical cores; env: LMSSS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides config; env: LMSSS_OUTPUT_DIR).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Base seed (overrides config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ShrinkArgs {
    /// CSV dataset; the label sits in the last column unless told otherwise.
    dataset: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_mic: usize,
    #[arg(long, default_value_t = 200)]
    n_nds: usize,
    /// Lightweight evolutionary runs.
    #[arg(long, default_value_t = 5)]
    lightweight_runs: usize,
    /// Generations per lightweight run.
    #[arg(long, default_value_t = 10)]
    lightweight_generations: usize,
    /// Fraction of pooled solutions counted for frequencies.
    #[arg(long, default_value_t = 0.5)]
    top_fraction: f64,
    #[arg(long, default_value_t = 200)]
    pop_size: usize,
    /// Train fraction of the stratified split the shrinking runs on.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label column header name.
    #[arg(long, conflicts_with = "label_index")]
    label_name: Option<String>,
    /// Label column position, 0-based.
    #[arg(long)]
    label_index: Option<usize>,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value = ",")]
    delimiter: String,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Worker threads (default: logical cores; env: LMSSS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    instances: usize,
    #[arg(long)]
    features: usize,
    #[arg(long)]
    informative: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; the ground-truth index list goes next to it with a
    /// .truth.json suffix.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Shrink(args) => cmd_shrink(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let overrides = RunOverrides {
        threads: args.threads,
        output_dir: args.output_dir,
        seed: args.seed,
    };
    let (outcome, output_dir) = execute_run(&args.config, &overrides)?;
    println!(
        "wrote {} run reports, {} tables, fronts and timing to {}",
        outcome.reports.len(),
        outcome.tables.len(),
        output_dir.display()
    );
    Ok(())
}

fn cmd_shrink(args: ShrinkArgs) -> Result<()> {
    let threads = lmsss_cli::effective_threads(args.threads);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .ok();

    let options = CsvOptions {
        label_column: match (&args.label_name, args.label_index) {
            (Some(name), None) => LabelColumn::Name(name.clone()),
            (None, Some(index)) => LabelColumn::Index(index),
            _ => LabelColumn::Last,
        },
        header: !args.no_header,
        delimiter: args.delimiter.as_bytes().first().copied().unwrap_or(b','),
        normalize: false,
        ..CsvOptions::default()
    };
    let data = dataset::load_csv(&args.dataset, &options)
        .with_context(|| format!("loading {}", args.dataset.display()))?;

    let mut split = dataset::stratified_split(&data, args.train_fraction, args.seed)?;
    split.normalize();

    let cfg = ShrinkConfig {
        n_mic: args.n_mic,
        n_nds: args.n_nds,
        lightweight_runs: args.lightweight_runs,
        lightweight_generations: args.lightweight_generations,
        top_fraction: args.top_fraction,
        ea: EAConfig {
            pop_size: args.pop_size,
            generations: args.lightweight_generations,
            crossover: CrossoverOp::Voting { pr: 0.7 },
            init: InitScheme::SizeUniform,
            seed: seed::mix_str(args.seed, "shrink"),
            ..EAConfig::default()
        },
        ..ShrinkConfig::default()
    };
    let result = shrink(&split.train, &cfg)?;
    output::write_shrink(&args.output_dir, &result)?;
    println!(
        "shrunk {} features to {}; wrote shrink_result.json and shrink_scatter.csv to {}",
        data.n_features(),
        result.selected.len(),
        args.output_dir.display()
    );
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let (data, informative) =
        dataset::generate_synthetic(args.instances, args.features, args.informative, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let options = CsvOptions {
        normalize: false,
        ..CsvOptions::default()
    };
    dataset::write_csv(&data, &args.out, &options)?;
    let truth_path = args.out.with_extension("truth.json");
    output::write_truth(&truth_path, &informative)?;
    println!(
        "wrote {} ({} x {}, label last) and {}",
        args.out.display(),
        args.instances,
        args.features + 1,
        truth_path.display()
    );
    Ok(())
}
