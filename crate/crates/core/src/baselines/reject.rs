use serde::{Deserialize, Serialize};

use super::{fit_logistic, LogisticModel, ProbabilityModel};
use crate::data::{LabeledDataset, UnlabeledDataset};
use crate::nn::Matrix;
use crate::{Error, Result};

/// Largest augmentation weight, reached at `p_reject = 0.99`.
pub const AUGMENT_WEIGHT_CAP: f64 = 100.0;

/// How reclassification turns reject scores into hard labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReclassifyRule {
    /// Label the top `fraction` of rejects by score as defaults; `None`
    /// uses the accepted-set default rate.
    TopFraction { fraction: Option<f64> },
    /// Label rejects with score at or above `cutoff` as defaults.
    Cutoff { cutoff: f64 },
}

impl Default for ReclassifyRule {
    fn default() -> Self {
        ReclassifyRule::TopFraction { fraction: None }
    }
}

/// Accepted rows plus every reject with a hard label from `base`.
pub fn reclassify(
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    base: &dyn ProbabilityModel,
    rule: ReclassifyRule,
) -> Result<LabeledDataset> {
    if rejected.is_empty() {
        return Ok(accepted.clone());
    }
    let p = base.predict_proba(&rejected.features)?;
    let labels: Vec<u8> = match rule {
        ReclassifyRule::Cutoff { cutoff } => p.iter().map(|&v| u8::from(v >= cutoff)).collect(),
        ReclassifyRule::TopFraction { fraction } => {
            let q = fraction.unwrap_or_else(|| accepted.default_rate());
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::contract(
                    "reclassification fraction must lie in [0, 1]",
                ));
            }
            let k = (q * p.len() as f64).round() as usize;
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
            let mut labels = vec![0u8; p.len()];
            for &i in &idx[..k] {
                labels[i] = 1;
            }
            labels
        }
    };
    let hard = LabeledDataset::new(
        rejected.features.clone(),
        labels,
        rejected.feature_names.clone(),
    )?;
    accepted.concat(&hard)
}

/// Training rows for fuzzy parceling: accepted rows with weight 1 and each
/// reject twice, as a default with weight `p` and as a non-default with
/// weight `1 - p`. Zero-weight copies are omitted.
pub fn fuzzy_parcel(
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    base: &dyn ProbabilityModel,
) -> Result<(Matrix, Vec<u8>, Vec<f64>)> {
    let p = if rejected.is_empty() {
        Vec::new()
    } else {
        base.predict_proba(&rejected.features)?
    };
    let d = accepted.dim();
    let mut data = accepted.features.data().to_vec();
    let mut labels = accepted.labels.clone();
    let mut weights = vec![1.0; accepted.len()];
    for (r, &pi) in rejected.features.iter_rows().zip(&p) {
        for (y, w) in [(1u8, pi), (0u8, 1.0 - pi)] {
            if w > 0.0 {
                data.extend_from_slice(r);
                labels.push(y);
                weights.push(w);
            }
        }
    }
    Ok((Matrix::from_vec(labels.len(), d, data)?, labels, weights))
}

/// `1 / (1 - p_reject)`, capped at [`AUGMENT_WEIGHT_CAP`].
pub fn augment_weight(p_reject: f64) -> f64 {
    let raw = 1.0 / (1.0 - p_reject);
    if !(raw <= AUGMENT_WEIGHT_CAP) {
        AUGMENT_WEIGHT_CAP
    } else {
        raw
    }
}

/// Augmentation weights of the accepted rows under an accept/reject model
/// scoring `P(rejected | x)`.
pub fn augment_weights(
    accepted: &LabeledDataset,
    reject_model: &dyn ProbabilityModel,
) -> Result<Vec<f64>> {
    let p = reject_model.predict_proba(&accepted.features)?;
    let capped = p
        .iter()
        .filter(|&&v| !(1.0 / (1.0 - v) <= AUGMENT_WEIGHT_CAP))
        .count();
    if capped > 0 {
        log::warn!("{capped} augmentation weights capped at {AUGMENT_WEIGHT_CAP}");
    }
    Ok(p.into_iter().map(augment_weight).collect())
}

fn fit_accepted(accepted: &LabeledDataset, l2: f64) -> Result<LogisticModel> {
    fit_logistic(
        &accepted.features,
        &accepted.labels,
        &vec![1.0; accepted.len()],
        l2,
    )
}

/// Base fit on accepted rows, hard-label the rejects, refit on the union.
pub fn fit_reclassification(
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    rule: ReclassifyRule,
    l2: f64,
) -> Result<LogisticModel> {
    let base = fit_accepted(accepted, l2)?;
    let all = reclassify(accepted, rejected, &base, rule)?;
    fit_logistic(&all.features, &all.labels, &vec![1.0; all.len()], l2)
}

/// Base fit on accepted rows, parcel the rejects, refit on the weighted union.
pub fn fit_fuzzy_parceling(
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    l2: f64,
) -> Result<LogisticModel> {
    let base = fit_accepted(accepted, l2)?;
    let (x, y, w) = fuzzy_parcel(accepted, rejected, &base)?;
    fit_logistic(&x, &y, &w, l2)
}

/// Fit an accept/reject model on all applications, then the outcome model on
/// accepted rows re-weighted by inverse acceptance probability.
pub fn fit_augmentation(
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    l2: f64,
) -> Result<LogisticModel> {
    if rejected.is_empty() {
        return fit_accepted(accepted, l2);
    }
    let x = accepted.features.vstack(&rejected.features)?;
    let mut flag = vec![0u8; accepted.len()];
    flag.extend(std::iter::repeat_n(1u8, rejected.len()));
    let ar = fit_logistic(&x, &flag, &vec![1.0; flag.len()], l2)?;
    let w = augment_weights(accepted, &ar)?;
    fit_logistic(&accepted.features, &accepted.labels, &w, l2)
}
