use std::path::{Path, PathBuf};

use rejinf::rng::derive_seed;

use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::models::{fit, ModelFile};
use crate::output::{create_dir, write_csv, write_manifest};
use crate::source::{design, load_source};
use crate::STREAM_MODEL;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub model: ModelKind,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub epochs: usize,
    pub final_loss: Option<f64>,
}

/// Fits the selected model on the design's training split and writes
/// `model.json` and `loss_trace.csv`.
pub fn train(config: &RunConfig, out: &Path) -> CliResult<TrainSummary> {
    let name = config
        .train
        .model
        .as_deref()
        .ok_or_else(|| CliError::config("choose a model with --model or train.model"))?;
    let kind = ModelKind::parse(name)?;
    let source = load_source(config)?;
    let d = design(config, &source)?;
    let oracle = source.synthetic.as_ref().map(|s| &s.oracle);
    let (model, traces) = fit(
        kind,
        &config.models,
        &d.train_labeled,
        &d.train_unlabeled,
        oracle,
        derive_seed(config.seed, STREAM_MODEL),
    )?;
    if let Some(bad) = traces
        .pretrain
        .iter()
        .chain(&traces.train)
        .find(|v| !v.is_finite())
    {
        return Err(CliError::SelfCheck(format!(
            "non-finite training loss {bad}"
        )));
    }
    create_dir(out)?;
    let paths: Vec<PathBuf> = vec![out.join("model.json"), out.join("loss_trace.csv")];
    ModelFile::new(model, d.standardizer.clone()).save(&paths[0])?;
    let rows = |phase: &'static str, trace: &[f64]| -> Vec<Vec<String>> {
        trace
            .iter()
            .enumerate()
            .map(|(e, v)| vec![phase.to_string(), (e + 1).to_string(), v.to_string()])
            .collect()
    };
    let mut all = rows("pretrain", &traces.pretrain);
    all.extend(rows("train", &traces.train));
    write_csv(&paths[1], &["phase", "epoch", "loss"], all)?;
    write_manifest(out, "train", config, &paths)?;
    Ok(TrainSummary {
        model: kind,
        n_labeled: d.train_labeled.len(),
        n_unlabeled: d.train_unlabeled.len(),
        epochs: traces.train.len(),
        final_loss: traces.train.last().copied(),
    })
}
