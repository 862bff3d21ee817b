//! Classical reject-inference methods on a weighted logistic regression,
//! and self-learning over a supervised MLP.

mod logistic;
mod mlp;
mod reject;
mod self_learn;

pub use logistic::{fit_logistic, logreg_fit, LogisticModel, WeightedRow};
pub use mlp::{mlp_loss, supervised_mlp, MlpClassifier, MlpConfig};
pub use reject::{
    augment_weight, augment_weights, fit_augmentation, fit_fuzzy_parceling, fit_reclassification,
    fuzzy_parcel, reclassify, ReclassifyRule, AUGMENT_WEIGHT_CAP,
};
pub use self_learn::{self_learn, SelfLearned};

use crate::nn::Matrix;
use crate::Result;

/// Anything that scores rows with `P(y = 1 | x)`.
pub trait ProbabilityModel {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>>;
}
