//! Command-line harness: simulate data, train and evaluate one model, or
//! run a benchmark grid over models and training-set sizes.
//!
//! Every command reads one TOML [`config::RunConfig`] and writes its
//! artifacts plus a `manifest.json` recording the config and seed.

// `!(x >= 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod models;
pub mod output;
pub mod simulate;
pub mod source;
pub mod train;

use std::path::{Path, PathBuf};

pub use config::{ModelKind, RunConfig};
pub use error::{CliError, CliResult};

/// Seed streams derived from the run seed.
pub(crate) const STREAM_GENERATOR: u64 = 1;
pub(crate) const STREAM_DESIGN: u64 = 2;
pub(crate) const STREAM_MODEL: u64 = 3;
pub(crate) const STREAM_HOLDOUT: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Train,
    Evaluate,
    Benchmark,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub model: Option<String>,
    pub threads: Option<usize>,
}

/// Reads the config, applies flag overrides and validates the result.
pub fn resolve_config(command: Command, opts: &Options) -> CliResult<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(m) = &opts.model {
        match command {
            Command::Train => cfg.train.model = Some(m.clone()),
            Command::Benchmark => cfg.benchmark.models = vec![m.clone()],
            Command::Simulate | Command::Evaluate => {
                return Err(CliError::config("--model applies to train and benchmark"));
            }
        }
    }
    if opts.threads == Some(0) {
        return Err(CliError::config("--threads must be positive"));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and returns a one-line summary.
pub fn run(command: Command, opts: &Options) -> CliResult<String> {
    let cfg = resolve_config(command, opts)?;
    let out: &Path = &opts.out;
    Ok(match command {
        Command::Simulate => {
            let s = simulate::simulate(&cfg, out)?;
            format!(
                "simulated {} accepted and {} rejected applications (Bayes AUC {:.4} population, {:.4} accepted)",
                s.accepted, s.rejected, s.population_bayes_auc, s.accepted_bayes_auc
            )
        }
        Command::Train => {
            let s = train::train(&cfg, out)?;
            let loss = s
                .final_loss
                .map_or_else(String::new, |l| format!(", final loss {l:.6}"));
            format!(
                "trained {} on {} labeled and {} unlabeled rows ({} epochs{loss})",
                s.model, s.n_labeled, s.n_unlabeled, s.epochs
            )
        }
        Command::Evaluate => {
            let s = evaluate::evaluate(&cfg, out)?;
            format!(
                "{}: auc {:.6}, gini {:.6}, h {:.6}, recall {:.4}, precision {:.4} on {} rows",
                s.model,
                s.report.auc,
                s.report.gini,
                s.report.h_measure,
                s.report.recall,
                s.report.precision,
                s.report.n_test
            )
        }
        Command::Benchmark => {
            let r = benchmark::benchmark(&cfg, out, opts.threads)?;
            let failed = r
                .cells
                .iter()
                .filter(|c| c.status == benchmark::CellStatus::Failed)
                .count();
            format!(
                "benchmarked {} cells ({failed} with failures)",
                r.cells.len()
            )
        }
    })
}
