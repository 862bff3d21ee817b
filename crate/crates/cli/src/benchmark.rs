//! The scenario grid: every model against every (accepted, rejected)
//! training size, repeated over random splits.
//!
//! Each split and each cell draws from a seed derived from the run seed and
//! a text id, so results do not depend on the thread count or on which
//! other cells are in the grid. Splits depend only on the accepted count
//! and the repeat index: scenarios that differ in their reject count share
//! the labeled training rows, and smaller reject sets are subsets of
//! larger ones.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rejinf::data::{
    make_design, synth_generate, Design, DesignSpec, GeneratorConfig, SyntheticOracle,
};
use rejinf::eval::{metrics_report, MetricsReport, ScoredSet};
use rejinf::nn::Matrix;
use rejinf::rng::derive_seed;
use serde::Serialize;

use crate::config::{ModelKind, RunConfig, TestPopulation};
use crate::error::{CliError, CliResult};
use crate::models::fit;
use crate::output::{create_dir, write_csv, write_json, write_manifest};
use crate::source::{load_source, Source};
use crate::{STREAM_DESIGN, STREAM_HOLDOUT, STREAM_MODEL};

/// FNV-1a, used to turn cell ids into seed streams.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn stream_seed(base: u64, stream: u64, id: &str) -> u64 {
    derive_seed(derive_seed(base, stream), fnv1a(id))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Ok { report: MetricsReport },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub model: ModelKind,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// `failed` when any repeat failed; means cover the successful ones.
    pub status: CellStatus,
    pub runs_ok: usize,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    pub mean_gini: Option<f64>,
    pub mean_h_measure: Option<f64>,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub test_population: TestPopulation,
    pub repeats: usize,
    /// Closed-form AUC of the true posterior on the test population, for
    /// generated data.
    pub bayes_auc: Option<f64>,
    pub cells: Vec<CellResult>,
}

impl BenchmarkResult {
    pub fn cell(
        &self,
        model: ModelKind,
        n_accepted: usize,
        n_rejected: usize,
    ) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.n_accepted == n_accepted && c.n_rejected == n_rejected)
    }
}

/// Standardized and raw test rows of one split.
struct Split {
    design: Design,
    test_std: Matrix,
    test_raw: Matrix,
    test_labels: Vec<u8>,
}

fn holdout(g: &GeneratorConfig, n: usize, seed: u64) -> CliResult<(Matrix, Vec<u8>)> {
    let cfg = GeneratorConfig {
        n_applications: n,
        ..g.clone()
    };
    let h = synth_generate(&cfg, seed)?;
    let x = h.accepted.features.vstack(&h.rejected.features)?;
    let mut y = h.accepted.labels;
    y.extend(h.rejected_labels);
    Ok((x, y))
}

fn make_split(
    config: &RunConfig,
    source: &Source,
    n_acc: usize,
    n_rej: usize,
    repeat: usize,
) -> CliResult<Split> {
    let total = n_acc + n_rej;
    let spec = DesignSpec {
        acceptance_ratio: Some(n_acc as f64 / total as f64),
        max_total: Some(total),
        n_rejects: None,
        seed: stream_seed(
            config.seed,
            STREAM_DESIGN,
            &format!("split/{n_acc}/{repeat}"),
        ),
        ..config.design.clone()
    };
    let design = make_design(&source.accepted, &source.rejected, &spec)?;
    let (got_acc, got_rej) = (design.train_labeled.len(), design.train_unlabeled.len());
    if got_acc != n_acc || got_rej != n_rej {
        return Err(rejinf::Error::Infeasible(format!(
            "requested {n_acc} accepted and {n_rej} rejected training rows, the data supports {got_acc} and {got_rej}"
        ))
        .into());
    }
    let (test_raw, test_labels) = match config.benchmark.test_population {
        TestPopulation::Accepted => {
            let t = source.accepted.subset(&design.test_idx);
            (t.features, t.labels)
        }
        TestPopulation::ThroughTheDoor => {
            let g = config.generator.as_ref().ok_or_else(|| {
                CliError::config("through_the_door test rows need a [generator] section")
            })?;
            let seed = stream_seed(config.seed, STREAM_HOLDOUT, &format!("holdout/{repeat}"));
            holdout(g, config.benchmark.holdout_applications, seed)?
        }
    };
    let test_std = design.standardizer.apply(&test_raw)?;
    Ok(Split {
        design,
        test_std,
        test_raw,
        test_labels,
    })
}

fn run_cell(
    config: &RunConfig,
    oracle: Option<&SyntheticOracle>,
    split: &CliResult<Split>,
    model: ModelKind,
    seed: u64,
) -> CliResult<MetricsReport> {
    let split = split
        .as_ref()
        .map_err(|e| CliError::config(e.to_string()))?;
    let d = &split.design;
    let (fitted, _) = fit(
        model,
        &config.models,
        &d.train_labeled,
        &d.train_unlabeled,
        oracle,
        seed,
    )?;
    let scores = fitted.predict(&split.test_std, &split.test_raw)?;
    let set = ScoredSet::new(scores, split.test_labels.clone())?;
    let ev = &config.evaluate;
    Ok(metrics_report(&set, seed, ev.threshold_rule, ev.h_measure)?)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(
    model: ModelKind,
    n_accepted: usize,
    n_rejected: usize,
    runs: Vec<RunRecord>,
) -> CellResult {
    let reports: Vec<&MetricsReport> = runs
        .iter()
        .filter_map(|r| match &r.outcome {
            RunOutcome::Ok { report } => Some(report),
            RunOutcome::Failed { .. } => None,
        })
        .collect();
    let field =
        |f: fn(&MetricsReport) -> f64| mean(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    let std_auc = mean(&aucs).map(|m| {
        if aucs.len() < 2 {
            0.0
        } else {
            (aucs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (aucs.len() - 1) as f64).sqrt()
        }
    });
    CellResult {
        model,
        n_accepted,
        n_rejected,
        status: if reports.len() == runs.len() {
            CellStatus::Ok
        } else {
            CellStatus::Failed
        },
        runs_ok: reports.len(),
        mean_auc: mean(&aucs),
        std_auc,
        mean_gini: field(|r| r.gini),
        mean_h_measure: field(|r| r.h_measure),
        mean_recall: field(|r| r.recall),
        mean_precision: field(|r| r.precision),
        runs,
    }
}

/// Runs the grid on `threads` workers (`None`: one per core). The result
/// is identical for every thread count.
pub fn run_benchmark(config: &RunConfig, threads: Option<usize>) -> CliResult<BenchmarkResult> {
    let models = config.benchmark_models()?;
    let bench = &config.benchmark;
    if bench.test_population == TestPopulation::ThroughTheDoor && config.generator.is_none() {
        return Err(CliError::config(
            "through_the_door test rows need a [generator] section",
        ));
    }
    let source = load_source(config)?;
    let oracle = source.synthetic.as_ref().map(|s| &s.oracle);
    let bayes_auc = oracle.map(|o| match bench.test_population {
        TestPopulation::Accepted => o.accepted_bayes_auc(),
        TestPopulation::ThroughTheDoor => o.population_bayes_auc(),
    });

    let mut scenarios = Vec::new();
    for &a in &bench.n_accepted {
        for &r in &bench.n_rejected {
            scenarios.push((a, r));
        }
    }
    let split_keys: Vec<(usize, usize, usize)> = scenarios
        .iter()
        .flat_map(|&(a, r)| (0..bench.repeats).map(move |k| (a, r, k)))
        .collect();
    let mut jobs = Vec::new();
    for &m in &models {
        for (s, &(a, r, k)) in split_keys.iter().enumerate() {
            let seed = stream_seed(config.seed, STREAM_MODEL, &format!("cell/{m}/{a}/{r}/{k}"));
            jobs.push((m, s, seed));
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let (splits, outcomes): (Vec<CliResult<Split>>, Vec<RunOutcome>) = pool.install(|| {
        let splits: Vec<CliResult<Split>> = split_keys
            .par_iter()
            .map(|&(a, r, k)| make_split(config, &source, a, r, k))
            .collect();
        let outcomes = jobs
            .par_iter()
            .map(
                |&(m, s, seed)| match run_cell(config, oracle, &splits[s], m, seed) {
                    Ok(report) => RunOutcome::Ok { report },
                    Err(e) => {
                        log::warn!("{m} on split {:?} failed: {e}", split_keys[s]);
                        RunOutcome::Failed {
                            error: e.to_string(),
                        }
                    }
                },
            )
            .collect();
        (splits, outcomes)
    });
    drop(splits);

    let per_cell = bench.repeats;
    let mut cells = Vec::new();
    let mut it = jobs.iter().zip(outcomes);
    for &m in &models {
        for &(a, r) in &scenarios {
            let runs: Vec<RunRecord> = it
                .by_ref()
                .take(per_cell)
                .map(|(&(_, s, seed), outcome)| RunRecord {
                    repeat: split_keys[s].2,
                    seed,
                    outcome,
                })
                .collect();
            cells.push(summarize(m, a, r, runs));
        }
    }
    Ok(BenchmarkResult {
        test_population: bench.test_population,
        repeats: bench.repeats,
        bayes_auc,
        cells,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes `benchmark.json` (every run) and `benchmark.csv` (one line per cell).
pub fn benchmark(
    config: &RunConfig,
    out: &Path,
    threads: Option<usize>,
) -> CliResult<BenchmarkResult> {
    let result = run_benchmark(config, threads)?;
    create_dir(out)?;
    let paths: Vec<PathBuf> = vec![out.join("benchmark.json"), out.join("benchmark.csv")];
    write_json(&paths[0], &result)?;
    let rows = result.cells.iter().map(|c| {
        vec![
            c.model.to_string(),
            c.n_accepted.to_string(),
            c.n_rejected.to_string(),
            if c.status == CellStatus::Ok {
                "ok"
            } else {
                "failed"
            }
            .to_string(),
            c.runs_ok.to_string(),
            opt(c.mean_auc),
            opt(c.std_auc),
            opt(c.mean_gini),
            opt(c.mean_h_measure),
            opt(c.mean_recall),
            opt(c.mean_precision),
        ]
    });
    write_csv(
        &paths[1],
        &[
            "model",
            "n_accepted",
            "n_rejected",
            "status",
            "runs_ok",
            "mean_auc",
            "std_auc",
            "mean_gini",
            "mean_h_measure",
            "mean_recall",
            "mean_precision",
        ],
        rows,
    )?;
    write_manifest(out, "benchmark", config, &paths)?;
    Ok(result)
}
