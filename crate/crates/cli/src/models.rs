//! Fitting, scoring and persisting every model the harness knows.

use std::path::Path;

use rejinf::baselines::{
    fit_augmentation, fit_fuzzy_parceling, fit_reclassification, self_learn, supervised_mlp,
    LogisticModel, MlpClassifier, MlpConfig, ProbabilityModel,
};
use rejinf::data::{LabeledDataset, Standardizer, SyntheticOracle, UnlabeledDataset};
use rejinf::model1::{predict_proba1, train1, Model1Params};
use rejinf::model2::{predict_proba2, train2, Model2Params};
use rejinf::nn::Matrix;
use rejinf::rng::{derive_seed, seeded};
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, ModelSettings};
use crate::error::{CliError, CliResult};
use crate::output::{read_json, write_json};

pub const MODEL_FORMAT: &str = "rejinf-model";
pub const MODEL_VERSION: u32 = 1;

/// Seed streams hung off a model seed.
const STREAM_FIT: u64 = 1;
const STREAM_PREDICT: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", content = "params", rename_all = "snake_case")]
pub enum FittedModel {
    Model1(Model1Params),
    Model2 {
        params: Model2Params,
        predict_samples: usize,
        predict_seed: u64,
    },
    Mlp(MlpClassifier),
    Reclassification(LogisticModel),
    FuzzyParceling(LogisticModel),
    Augmentation(LogisticModel),
    SelfLearningMlp(MlpClassifier),
    Oracle(SyntheticOracle),
}

/// Loss traces of the generative models, empty for the baselines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Traces {
    pub pretrain: Vec<f64>,
    pub train: Vec<f64>,
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Model1(_) => ModelKind::Model1,
            FittedModel::Model2 { .. } => ModelKind::Model2,
            FittedModel::Mlp(_) => ModelKind::Mlp,
            FittedModel::Reclassification(_) => ModelKind::Reclassification,
            FittedModel::FuzzyParceling(_) => ModelKind::FuzzyParceling,
            FittedModel::Augmentation(_) => ModelKind::Augmentation,
            FittedModel::SelfLearningMlp(_) => ModelKind::SelfLearningMlp,
            FittedModel::Oracle(_) => ModelKind::Oracle,
        }
    }

    /// `P(y = 1)` per row. Learned models read standardized features, the
    /// oracle reads raw generator output.
    pub fn predict(&self, standardized: &Matrix, raw: &Matrix) -> CliResult<Vec<f64>> {
        Ok(match self {
            FittedModel::Model1(p) => predict_proba1(p, standardized)?,
            FittedModel::Model2 {
                params,
                predict_samples,
                predict_seed,
            } => predict_proba2(
                params,
                standardized,
                *predict_samples,
                &mut seeded(*predict_seed),
            )?,
            FittedModel::Mlp(m) | FittedModel::SelfLearningMlp(m) => {
                m.predict_proba(standardized)?
            }
            FittedModel::Reclassification(m)
            | FittedModel::FuzzyParceling(m)
            | FittedModel::Augmentation(m) => m.predict_proba(standardized)?,
            FittedModel::Oracle(o) => raw.iter_rows().map(|r| o.posterior(r)).collect(),
        })
    }
}

/// Trains `kind` on standardized training sets. `seed` replaces every
/// nested model seed.
pub fn fit(
    kind: ModelKind,
    settings: &ModelSettings,
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    oracle: Option<&SyntheticOracle>,
    seed: u64,
) -> CliResult<(FittedModel, Traces)> {
    let fit_seed = derive_seed(seed, STREAM_FIT);
    let b = &settings.baselines;
    let mlp_config = MlpConfig {
        seed: fit_seed,
        ..settings.mlp.clone()
    };
    let no_trace = |m: FittedModel| (m, Traces::default());
    Ok(match kind {
        ModelKind::Model1 => {
            let cfg = rejinf::model1::TrainConfig1 {
                seed: fit_seed,
                ..settings.model1.clone()
            };
            let t = train1(labeled, unlabeled, &cfg)?;
            let traces = Traces {
                pretrain: t.pretrain_trace,
                train: t.loss_trace,
            };
            (FittedModel::Model1(t.params), traces)
        }
        ModelKind::Model2 => {
            let cfg = rejinf::model2::TrainConfig2 {
                seed: fit_seed,
                ..settings.model2.clone()
            };
            let t = train2(labeled, unlabeled, &cfg)?;
            let traces = Traces {
                pretrain: t.pretrain_trace,
                train: t.loss_trace,
            };
            let model = FittedModel::Model2 {
                params: t.params,
                predict_samples: cfg.predict_samples,
                predict_seed: derive_seed(seed, STREAM_PREDICT),
            };
            (model, traces)
        }
        ModelKind::Mlp => no_trace(FittedModel::Mlp(supervised_mlp(labeled, &mlp_config)?)),
        ModelKind::Reclassification => no_trace(FittedModel::Reclassification(
            fit_reclassification(labeled, unlabeled, b.reclassify, b.l2)?,
        )),
        ModelKind::FuzzyParceling => no_trace(FittedModel::FuzzyParceling(fit_fuzzy_parceling(
            labeled, unlabeled, b.l2,
        )?)),
        ModelKind::Augmentation => no_trace(FittedModel::Augmentation(fit_augmentation(
            labeled, unlabeled, b.l2,
        )?)),
        ModelKind::SelfLearningMlp => {
            let learned = self_learn(
                |pool: &LabeledDataset| supervised_mlp(pool, &mlp_config),
                labeled,
                unlabeled,
                b.confidence,
                b.max_rounds,
            )?;
            log::info!(
                "self-learning ran {} rounds, pool sizes {:?}",
                learned.rounds,
                learned.pool_sizes
            );
            no_trace(FittedModel::SelfLearningMlp(learned.model))
        }
        ModelKind::Oracle => {
            let o = oracle
                .ok_or_else(|| CliError::config("the oracle model needs a [generator] section"))?;
            no_trace(FittedModel::Oracle(o.clone()))
        }
    })
}

/// The portable model file: a format tag, the input schema and the
/// standardizer fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub standardizer: Standardizer,
    #[serde(flatten)]
    pub model: FittedModel,
}

impl ModelFile {
    pub fn new(model: FittedModel, standardizer: Standardizer) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            standardizer,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file: Self = read_json(path)?;
        if file.format != MODEL_FORMAT {
            return Err(CliError::config(format!(
                "{}: not a model file",
                path.display()
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(CliError::config(format!(
                "{}: model format version {} is not supported",
                path.display(),
                file.version
            )));
        }
        Ok(file)
    }

    /// Scores raw rows whose columns must match the training schema.
    pub fn score(&self, raw: &Matrix, columns: &[String]) -> CliResult<Vec<f64>> {
        if columns != self.standardizer.input_names.as_slice() {
            return Err(rejinf::Error::Schema(format!(
                "model expects columns {:?}, data has {:?}",
                self.standardizer.input_names, columns
            ))
            .into());
        }
        let standardized = self.standardizer.apply(raw)?;
        self.model.predict(&standardized, raw)
    }
}
