//! Experiment harness: runs seeded training runs for one or more strategies,
//! lays results out on disk, and builds the cross-algorithm summary.
//!
//! Output layout under the chosen directory:
//!
//!   manifest.json                  run metadata and the resolved config
//!   <strategy>/run_<id>.csv        per-round log of one seeded run
//!   <strategy>_averaged.csv        per-round means across runs
//!   summary.csv / summary.txt      cross-strategy table (suite/summarize)
//!
//! Every run is deterministic in (config, seed_base, run_id), so re-running
//! a command over the same inputs reproduces every file byte for byte.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SuiteConfig};
use crate::csvio::{
    read_averaged_csv, write_averaged_csv, write_round_csv, write_summary_csv, write_summary_text,
    AveragedRow,
};
use crate::error::{Error, Result};
use crate::merge::StrategyKind;
use crate::metrics::{ema_series, summarize, AlgorithmSeries, SummaryRow};
use crate::runtime::{run_training, RoundRecord};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_CSV_FILE: &str = "summary.csv";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";

/// The reference algorithm for percentage columns when it is part of the
/// suite.
pub const DEFAULT_BASELINE: StrategyKind = StrategyKind::BaselineSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

/// Metadata describing one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub env: String,
    pub k: usize,
    pub runs: usize,
    pub rounds: usize,
    pub env_threshold: f64,
    pub end_threshold: f64,
    pub baseline: String,
    pub strategies: Vec<String>,
    pub status: RunStatus,
    pub config: serde_json::Value,
}

impl Manifest {
    fn new(cfg: &ExperimentConfig, strategies: &[StrategyKind], status: RunStatus) -> Result<Self> {
        let baseline = if strategies.contains(&DEFAULT_BASELINE) {
            DEFAULT_BASELINE
        } else {
            strategies[0]
        };
        Ok(Manifest {
            tool: "rlmerge".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            env: cfg.env.name().to_string(),
            k: cfg.k,
            runs: cfg.runs,
            rounds: cfg.rounds,
            env_threshold: cfg.env_threshold,
            end_threshold: cfg.end_threshold,
            baseline: baseline.name().to_string(),
            strategies: strategies.iter().map(|s| s.name().to_string()).collect(),
            status,
            config: serde_json::to_value(cfg)?,
        })
    }
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn strategy_dir(out_dir: &Path, kind: StrategyKind) -> PathBuf {
    out_dir.join(kind.name())
}

pub fn run_csv_path(out_dir: &Path, kind: StrategyKind, run_id: usize) -> PathBuf {
    strategy_dir(out_dir, kind).join(format!("run_{run_id}.csv"))
}

pub fn averaged_csv_path(out_dir: &Path, kind: StrategyKind) -> PathBuf {
    out_dir.join(format!("{}_averaged.csv", kind.name()))
}

/// Per-round means across runs, summed in run-id order, with a fresh EMA
/// over the averaged series.
pub fn average_runs(per_run: &[Vec<RoundRecord>]) -> Result<Vec<AveragedRow>> {
    if per_run.is_empty() {
        return Err(Error::EmptyInput("run list"));
    }
    let rounds = per_run[0].len();
    for recs in per_run {
        if recs.len() != rounds {
            return Err(Error::ShapeMismatch {
                what: "run round count",
                expected: rounds,
                actual: recs.len(),
            });
        }
    }
    let n = per_run.len() as f64;
    let means: Vec<f64> = (0..rounds)
        .map(|r| per_run.iter().map(|recs| recs[r].mean_reward).sum::<f64>() / n)
        .collect();
    let ema = ema_series(&means);
    Ok((0..rounds)
        .map(|r| AveragedRow {
            round: r,
            mean_reward: means[r],
            ema_reward: ema[r],
        })
        .collect())
}

/// Runs all seeded runs for one strategy and writes its files. On a training
/// abort the partial run log is still flushed before the error surfaces.
pub fn run_strategy(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<AveragedRow>> {
    let dir = strategy_dir(out_dir, cfg.strategy);
    std::fs::create_dir_all(&dir)?;

    let results: Vec<_> = (0..cfg.runs)
        .into_par_iter()
        .map(|run_id| run_training(cfg, run_id))
        .collect();

    let mut per_run = Vec::with_capacity(cfg.runs);
    for (run_id, result) in results.into_iter().enumerate() {
        match result {
            Ok(records) => {
                write_round_csv(
                    &run_csv_path(out_dir, cfg.strategy, run_id),
                    cfg.k,
                    &records,
                )?;
                per_run.push(records);
            }
            Err(train_err) => {
                write_round_csv(
                    &run_csv_path(out_dir, cfg.strategy, run_id),
                    cfg.k,
                    &train_err.records,
                )?;
                return Err(Error::invalid(format!(
                    "strategy {} run {run_id} aborted after {} rounds: {}",
                    cfg.strategy.name(),
                    train_err.records.len(),
                    train_err.source
                )));
            }
        }
    }

    let averaged = average_runs(&per_run)?;
    write_averaged_csv(&averaged_csv_path(out_dir, cfg.strategy), &averaged)?;
    for (run_id, records) in per_run.iter().enumerate() {
        if let Some(last) = records.last() {
            println!(
                "  {} run {}: {} rounds, final ema {:.2}",
                cfg.strategy.name(),
                run_id,
                records.len(),
                last.ema_reward
            );
        }
    }
    Ok(averaged)
}

fn print_plan(cfg: &ExperimentConfig, strategies: &[StrategyKind], out_dir: &Path) {
    println!("plan:");
    println!("  env: {} (net {})", cfg.env.name(), cfg.net.name());
    println!(
        "  workers: {} (h = {}), rounds: {}, steps/round: {}",
        cfg.k, cfg.h, cfg.rounds, cfg.steps_per_round
    );
    println!(
        "  runs per strategy: {} (seed base {})",
        cfg.runs, cfg.seed_base
    );
    let names: Vec<&str> = strategies.iter().map(|s| s.name()).collect();
    println!("  strategies: {}", names.join(", "));
    println!("  out dir: {}", out_dir.display());
}

/// `train`: all runs of a single strategy plus the averaged series.
pub fn train_command(cfg: &ExperimentConfig, out_dir: &Path, dry_run: bool) -> Result<()> {
    cfg.validate()?;
    let strategies = [cfg.strategy];
    if dry_run {
        print_plan(cfg, &strategies, out_dir);
        return Ok(());
    }
    std::fs::create_dir_all(out_dir)?;
    write_manifest(
        out_dir,
        &Manifest::new(cfg, &strategies, RunStatus::Partial)?,
    )?;
    run_strategy(cfg, out_dir)?;
    write_manifest(
        out_dir,
        &Manifest::new(cfg, &strategies, RunStatus::Complete)?,
    )?;
    Ok(())
}

/// `suite`: every configured strategy over the shared base config, then the
/// summary table.
pub fn suite_command(suite: &SuiteConfig, out_dir: &Path, dry_run: bool) -> Result<()> {
    suite.base.validate()?;
    if dry_run {
        print_plan(&suite.base, &suite.strategies, out_dir);
        return Ok(());
    }
    std::fs::create_dir_all(out_dir)?;
    write_manifest(
        out_dir,
        &Manifest::new(&suite.base, &suite.strategies, RunStatus::Partial)?,
    )?;

    let mut series = Vec::with_capacity(suite.strategies.len());
    for &kind in &suite.strategies {
        let cfg = suite.config_for(kind);
        let averaged = run_strategy(&cfg, out_dir)?;
        series.push(AlgorithmSeries {
            name: kind.name().to_string(),
            rewards: averaged.iter().map(|r| r.mean_reward).collect(),
        });
    }

    let manifest = Manifest::new(&suite.base, &suite.strategies, RunStatus::Complete)?;
    let rows = summarize(
        &series,
        &manifest.baseline,
        suite.base.env_threshold,
        suite.base.end_threshold,
    )?;
    write_summary_csv(&out_dir.join(SUMMARY_CSV_FILE), &rows)?;
    write_summary_text(&out_dir.join(SUMMARY_TEXT_FILE), &rows)?;
    write_manifest(out_dir, &manifest)?;
    print!(
        "{}",
        std::fs::read_to_string(out_dir.join(SUMMARY_TEXT_FILE))?
    );
    Ok(())
}

/// `summarize`: rebuild the summary table from the averaged series on disk.
pub fn summarize_command(in_dir: &Path, out_dir: Option<&Path>) -> Result<Vec<SummaryRow>> {
    let manifest = read_manifest(in_dir)?;
    if manifest.status != RunStatus::Complete {
        return Err(Error::invalid(format!(
            "run directory {} is marked partial; re-run training first",
            in_dir.display()
        )));
    }
    let mut series = Vec::with_capacity(manifest.strategies.len());
    for name in &manifest.strategies {
        let kind = StrategyKind::from_name(name)?;
        let rows = read_averaged_csv(&averaged_csv_path(in_dir, kind))?;
        series.push(AlgorithmSeries {
            name: name.clone(),
            rewards: rows.iter().map(|r| r.mean_reward).collect(),
        });
    }
    let rows = summarize(
        &series,
        &manifest.baseline,
        manifest.env_threshold,
        manifest.end_threshold,
    )?;
    let target = out_dir.unwrap_or(in_dir);
    std::fs::create_dir_all(target)?;
    write_summary_csv(&target.join(SUMMARY_CSV_FILE), &rows)?;
    write_summary_text(&target.join(SUMMARY_TEXT_FILE), &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests::doors_test_config;
    use crate::csvio::read_round_csv;
    use crate::nn::OptimKind;
    use tempfile::tempdir;

    fn tiny(strategy: StrategyKind) -> ExperimentConfig {
        let mut cfg = doors_test_config(strategy, 2, 3, 24);
        cfg.runs = 2;
        cfg
    }

    #[test]
    fn average_runs_is_exact_mean_per_round() {
        let mk = |vals: &[f64]| -> Vec<RoundRecord> {
            vals.iter()
                .enumerate()
                .map(|(round, &v)| RoundRecord {
                    run_id: 0,
                    round,
                    cumulative_episodes: 0,
                    mean_reward: v,
                    ema_reward: 0.0,
                    mean_loss: 0.0,
                    grad_norm: 0.0,
                    agents: Vec::new(),
                })
                .collect()
        };
        let avg = average_runs(&[mk(&[1.0, 3.0]), mk(&[3.0, 5.0])]).unwrap();
        assert_eq!(avg[0].mean_reward, 2.0);
        assert_eq!(avg[1].mean_reward, 4.0);
        assert_eq!(avg[0].ema_reward, 2.0);
        assert!((avg[1].ema_reward - (0.9 * 2.0 + 0.1 * 4.0)).abs() < 1e-12);
        assert!(average_runs(&[mk(&[1.0]), mk(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn train_command_writes_expected_layout() {
        let dir = tempdir().unwrap();
        let cfg = tiny(StrategyKind::RWeighted);
        train_command(&cfg, dir.path(), false).unwrap();

        let manifest = read_manifest(dir.path()).unwrap();
        assert_eq!(manifest.status, RunStatus::Complete);
        assert_eq!(manifest.strategies, vec!["r_weighted".to_string()]);
        assert_eq!(manifest.runs, 2);

        for run_id in 0..2 {
            let (k, rows) =
                read_round_csv(&run_csv_path(dir.path(), cfg.strategy, run_id)).unwrap();
            assert_eq!(k, 2);
            assert_eq!(rows.len(), 3);
            assert_eq!(rows[0].run_id, run_id);
        }
        let averaged = read_averaged_csv(&averaged_csv_path(dir.path(), cfg.strategy)).unwrap();
        assert_eq!(averaged.len(), 3);

        // Averaged row is the exact mean of the two runs.
        let (_, r0) = read_round_csv(&run_csv_path(dir.path(), cfg.strategy, 0)).unwrap();
        let (_, r1) = read_round_csv(&run_csv_path(dir.path(), cfg.strategy, 1)).unwrap();
        let expect = (r0[0].mean_reward + r1[0].mean_reward) / 2.0;
        assert_eq!(averaged[0].mean_reward, expect);
    }

    #[test]
    fn train_command_is_reproducible_byte_for_byte() {
        let cfg = tiny(StrategyKind::BaselineSum);
        let da = tempdir().unwrap();
        let db = tempdir().unwrap();
        train_command(&cfg, da.path(), false).unwrap();
        train_command(&cfg, db.path(), false).unwrap();
        for run_id in 0..2 {
            let a = std::fs::read(run_csv_path(da.path(), cfg.strategy, run_id)).unwrap();
            let b = std::fs::read(run_csv_path(db.path(), cfg.strategy, run_id)).unwrap();
            assert_eq!(a, b);
        }
        let a = std::fs::read(averaged_csv_path(da.path(), cfg.strategy)).unwrap();
        let b = std::fs::read(averaged_csv_path(db.path(), cfg.strategy)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dry_run_writes_nothing() {
        let dir = tempdir().unwrap();
        let out = dir.path().join("out");
        train_command(&tiny(StrategyKind::BaselineSum), &out, true).unwrap();
        assert!(!out.exists());
    }

    #[test]
    fn suite_command_builds_summary_and_summarize_reproduces_it() {
        let dir = tempdir().unwrap();
        let suite = SuiteConfig {
            strategies: vec![StrategyKind::BaselineSum, StrategyKind::RWeighted],
            base: tiny(StrategyKind::BaselineSum),
        };
        suite_command(&suite, dir.path(), false).unwrap();

        let manifest = read_manifest(dir.path()).unwrap();
        assert_eq!(manifest.status, RunStatus::Complete);
        assert_eq!(manifest.baseline, "baseline_sum");

        let summary_a = std::fs::read(dir.path().join(SUMMARY_CSV_FILE)).unwrap();
        assert!(dir.path().join(SUMMARY_TEXT_FILE).exists());

        let rows = summarize_command(dir.path(), None).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].algorithm, "baseline_sum");
        assert!((rows[0].percent_avg.unwrap() - 100.0).abs() < 1e-9);
        let summary_b = std::fs::read(dir.path().join(SUMMARY_CSV_FILE)).unwrap();
        assert_eq!(summary_a, summary_b);

        // Redirected output directory.
        let alt = dir.path().join("alt");
        summarize_command(dir.path(), Some(&alt)).unwrap();
        assert_eq!(
            summary_a,
            std::fs::read(alt.join(SUMMARY_CSV_FILE)).unwrap()
        );
    }

    #[test]
    fn aborted_training_flushes_partial_and_marks_manifest() {
        let dir = tempdir().unwrap();
        let mut cfg = tiny(StrategyKind::BaselineSum);
        cfg.runs = 1;
        cfg.rounds = 50;
        cfg.optimizer.kind = OptimKind::Sgd;
        cfg.optimizer.learning_rate = 1e30;
        assert!(train_command(&cfg, dir.path(), false).is_err());

        let manifest = read_manifest(dir.path()).unwrap();
        assert_eq!(manifest.status, RunStatus::Partial);
        let (_, rows) = read_round_csv(&run_csv_path(dir.path(), cfg.strategy, 0)).unwrap();
        assert!(rows.len() < 50);
        assert!(summarize_command(dir.path(), None).is_err());
    }
}
