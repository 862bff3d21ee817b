//! The TOML run configuration shared by every subcommand.
//!
//! Every random stream derives from the top-level `seed`; nested `seed`
//! fields of the library configs must stay at zero.

use std::path::{Path, PathBuf};

use rejinf::baselines::{MlpConfig, ReclassifyRule};
use rejinf::data::{DesignSpec, GeneratorConfig, RejectCount};
use rejinf::eval::{HMeasureParams, ThresholdRule};
use rejinf::model1::TrainConfig1;
use rejinf::model2::TrainConfig2;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Models the harness can train and score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Model1,
    Model2,
    Mlp,
    Reclassification,
    FuzzyParceling,
    Augmentation,
    SelfLearningMlp,
    /// The generator's true posterior; needs a `[generator]` section.
    Oracle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Model1,
        ModelKind::Model2,
        ModelKind::Mlp,
        ModelKind::Reclassification,
        ModelKind::FuzzyParceling,
        ModelKind::Augmentation,
        ModelKind::SelfLearningMlp,
        ModelKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Model1 => "model1",
            ModelKind::Model2 => "model2",
            ModelKind::Mlp => "mlp",
            ModelKind::Reclassification => "reclassification",
            ModelKind::FuzzyParceling => "fuzzy_parceling",
            ModelKind::Augmentation => "augmentation",
            ModelKind::SelfLearningMlp => "self_learning_mlp",
            ModelKind::Oracle => "oracle",
        }
    }

    pub fn parse(name: &str) -> CliResult<Self> {
        if let Some(k) = Self::ALL.into_iter().find(|k| k.name() == name) {
            return Ok(k);
        }
        if matches!(name, "svm" | "self_learning_svm" | "s3vm") {
            return Err(CliError::config(format!(
                "'{name}': SVM baselines are not provided"
            )));
        }
        let known: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
        Err(CliError::config(format!(
            "unknown model '{name}' (expected one of {})",
            known.join(", ")
        )))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepted and rejected CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub accepted: PathBuf,
    pub rejected: PathBuf,
    #[serde(default = "default_label")]
    pub label_column: String,
}

fn default_label() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSettings {
    /// Ridge penalty of the logistic baselines.
    pub l2: f64,
    pub reclassify: ReclassifyRule,
    /// Self-learning: minimum winning-class probability for a pseudo-label.
    pub confidence: f64,
    pub max_rounds: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            reclassify: ReclassifyRule::default(),
            confidence: 0.9,
            max_rounds: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub model1: TrainConfig1,
    pub model2: TrainConfig2,
    pub mlp: MlpConfig,
    pub baselines: BaselineSettings,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationKind {
    #[default]
    None,
    Platt,
    PlattLogit,
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Model file; defaults to `model.json` in the output directory.
    pub model_file: Option<PathBuf>,
    /// Labeled CSV to score; defaults to the design's test split.
    pub test: Option<PathBuf>,
    pub threshold_rule: ThresholdRule,
    pub h_measure: HMeasureParams,
    /// Fitted on the design's calibration split.
    pub calibration: CalibrationKind,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            model_file: None,
            test: None,
            threshold_rule: ThresholdRule::Quantile,
            h_measure: HMeasureParams::default(),
            calibration: CalibrationKind::None,
        }
    }
}

/// Where benchmark test rows come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPopulation {
    /// The held-out accepted rows of each split.
    #[default]
    Accepted,
    /// A fresh labeled draw of every application, accepted or not.
    /// Needs a `[generator]` section.
    ThroughTheDoor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub models: Vec<String>,
    /// Labeled training rows per scenario.
    pub n_accepted: Vec<usize>,
    /// Rejected training rows per scenario.
    pub n_rejected: Vec<usize>,
    /// Random splits per cell.
    pub repeats: usize,
    pub test_population: TestPopulation,
    /// Applications in each through-the-door holdout draw.
    pub holdout_applications: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            models: vec!["model1".into(), "mlp".into()],
            n_accepted: vec![1000],
            n_rejected: vec![0, 5000],
            repeats: 5,
            test_population: TestPopulation::Accepted,
            holdout_applications: 20_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub generator: Option<GeneratorConfig>,
    pub data: Option<DataPaths>,
    pub design: DesignSpec,
    pub models: ModelSettings,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub benchmark: BenchmarkSection,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|source| CliError::Toml {
            path: path.to_owned(),
            source,
        })
    }

    /// Reads a config file and resolves data paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = cfg.data.as_mut() {
            resolve(&mut d.accepted);
            resolve(&mut d.rejected);
        }
        if let Some(p) = cfg.evaluate.model_file.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.evaluate.test.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        let nested = [
            ("design.seed", self.design.seed),
            ("models.model1.seed", self.models.model1.seed),
            ("models.model2.seed", self.models.model2.seed),
            ("models.mlp.seed", self.models.mlp.seed),
        ];
        for (key, v) in nested {
            if v != 0 {
                return Err(CliError::config(format!(
                    "{key} is derived from the top-level seed; remove it"
                )));
            }
        }
        self.models.model1.validate()?;
        self.models.model2.validate()?;
        let b = &self.models.baselines;
        if !(b.l2 >= 0.0) {
            return Err(CliError::config("models.baselines.l2 must be nonnegative"));
        }
        if !(b.confidence > 0.5 && b.confidence < 1.0) {
            return Err(CliError::config(
                "models.baselines.confidence must lie in (0.5, 1)",
            ));
        }
        if let Some(m) = &self.train.model {
            ModelKind::parse(m)?;
        }
        if self.generator.is_some() && self.data.is_some() {
            return Err(CliError::config(
                "give either [generator] or [data], not both",
            ));
        }
        let bench = &self.benchmark;
        for m in &bench.models {
            ModelKind::parse(m)?;
        }
        if bench.repeats == 0 {
            return Err(CliError::config("benchmark.repeats must be positive"));
        }
        if bench.n_accepted.contains(&0) {
            return Err(CliError::config(
                "benchmark.n_accepted entries must be positive",
            ));
        }
        if matches!(self.design.n_rejects, Some(RejectCount::Count(_)))
            && self.design.acceptance_ratio.is_some()
        {
            return Err(CliError::config(
                "design.n_rejects and design.acceptance_ratio conflict",
            ));
        }
        Ok(())
    }

    pub fn benchmark_models(&self) -> CliResult<Vec<ModelKind>> {
        self.benchmark
            .models
            .iter()
            .map(|m| ModelKind::parse(m))
            .collect()
    }
}
