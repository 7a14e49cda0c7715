use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use rlmerge::config::{load_config, LoadedConfig};
use rlmerge::harness;

#[derive(Parser)]
#[command(
    name = "rlmerge",
    version,
    about = "Distributed policy-gradient training with pluggable gradient merge strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seeded run of a single-strategy config.
    Train {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed_base.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's number of runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Where to write run logs and the manifest.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Print the resolved plan without running or writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run a multi-strategy comparison and build the summary table.
    Suite {
        /// Suite config (TOML with a 'strategies' list).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed_base.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's number of runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Where to write run logs, the summary, and the manifest.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Print the resolved plan without running or writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Rebuild summary.csv/summary.txt from an existing output directory.
    Summarize {
        /// Directory produced by a previous suite or train command.
        #[arg(long = "in")]
        in_dir: PathBuf,
        /// Where to write the summary files (defaults to the input dir).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            config,
            seed,
            runs,
            out_dir,
            dry_run,
        } => {
            let mut loaded =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            loaded.apply_overrides(seed, runs)?;
            let cfg = match loaded {
                LoadedConfig::Single(c) => c,
                LoadedConfig::Suite(_) => {
                    bail!("config defines 'strategies'; use the suite command")
                }
            };
            harness::train_command(&cfg, &out_dir, dry_run)?;
            if !dry_run {
                println!("wrote {}", out_dir.display());
            }
        }
        Command::Suite {
            config,
            seed,
            runs,
            out_dir,
            dry_run,
        } => {
            let mut loaded =
                load_config(&config).with_context(|| format!("loading {}", config.display()))?;
            loaded.apply_overrides(seed, runs)?;
            let suite = match loaded {
                LoadedConfig::Suite(s) => s,
                LoadedConfig::Single(_) => {
                    bail!("config defines a single 'strategy'; use the train command")
                }
            };
            harness::suite_command(&suite, &out_dir, dry_run)?;
            if !dry_run {
                println!("wrote {}", out_dir.display());
            }
        }
        Command::Summarize { in_dir, out_dir } => {
            harness::summarize_command(&in_dir, out_dir.as_deref())?;
            let target = out_dir.unwrap_or(in_dir);
            print!(
                "{}",
                std::fs::read_to_string(target.join(harness::SUMMARY_TEXT_FILE))?
            );
        }
    }
    Ok(())
}
