//! Datasets, CSV ingestion, standardization, the train/test design and the
//! synthetic application generator.

mod csvio;
mod design;
mod standardize;
mod synth;

pub use csvio::{
    load_csv, read_csv, write_labeled_csv, write_unlabeled_csv, CsvSchema, LoadReport, Loaded,
};
pub use design::{make_design, Design, DesignSpec, RejectCount};
pub use standardize::Standardizer;
pub use synth::{
    delta_for_auc, synth_generate, synth_oracle, AcceptRule, ColumnMap, DummyColumn,
    GeneratorConfig, MomentTarget, SyntheticData, SyntheticOracle,
};

use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

/// Accepted applications: features and observed outcome (`1` = default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

/// Rejected applications: features only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledDataset {
    pub features: Matrix,
    pub feature_names: Vec<String>,
}

fn check_features(features: &Matrix, names: &[String]) -> Result<()> {
    if names.len() != features.cols() {
        return Err(Error::dim("feature names", features.cols(), names.len()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite {
            term: "dataset features".into(),
        });
    }
    Ok(())
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        check_features(&features, &feature_names)?;
        if labels.len() != features.rows() {
            return Err(Error::dim("labels", features.rows(), labels.len()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::contract("labels must be 0 or 1"));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn default_rate(&self) -> f64 {
        self.n_positive() as f64 / self.len() as f64
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Concatenates rows of two datasets with the same schema.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.feature_names != other.feature_names {
            return Err(Error::Schema(
                "cannot concatenate datasets with different columns".into(),
            ));
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self {
            features: self.features.vstack(&other.features)?,
            labels,
            feature_names: self.feature_names.clone(),
        })
    }

    pub fn without_labels(&self) -> UnlabeledDataset {
        UnlabeledDataset {
            features: self.features.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

impl UnlabeledDataset {
    pub fn new(features: Matrix, feature_names: Vec<String>) -> Result<Self> {
        check_features(&features, &feature_names)?;
        Ok(Self {
            features,
            feature_names,
        })
    }

    pub fn empty(feature_names: Vec<String>) -> Self {
        Self {
            features: Matrix::zeros(0, feature_names.len()),
            feature_names,
        }
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            feature_names: self.feature_names.clone(),
        }
    }
}
