use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hqnn::harness::{report, run_grid, run_selftest, RunConfig};

#[derive(Parser)]
#[command(
    name = "hqnn",
    version,
    about = "Hybrid quantum-classical network benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configuration of a grid and write results and tables.
    Run {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Directory that dataset paths in the config are relative to.
        #[arg(long, default_value = ".")]
        data_dir: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the epoch count of the config.
        #[arg(long)]
        epochs: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the master seed of the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rebuild table1.csv, comparisons.csv and boxplot_data.csv from results.jsonl.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            data_dir,
            out,
            epochs,
            jobs,
            seed,
        } => {
            let mut cfg = RunConfig::load(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dataset = cfg.dataset.load(&data_dir).context("loading dataset")?;
            eprintln!(
                "{} samples of shape {:?}, classes {:?}",
                dataset.len(),
                dataset.sample_shape(),
                dataset.class_counts()
            );
            let summary = run_grid(&cfg, &dataset, &out, jobs)?;
            let failed = summary.results.iter().filter(|r| !r.completed()).count();
            eprintln!(
                "{} configs: {} trained, {} resumed, {} with failed folds",
                summary.results.len(),
                summary.trained,
                summary.skipped,
                failed
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { out } => {
            let tables = report(&out)?;
            for row in &tables.table1 {
                println!(
                    "{:<10} {:<14} {:.3} [{:.3}, {:.3}]",
                    row.group, row.metric, row.median, row.min, row.max
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!(
                    "{} {:<42} {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
