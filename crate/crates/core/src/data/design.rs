use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Standardizer, UnlabeledDataset};
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// How many rejected rows enter the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectCount {
    All,
    Count(usize),
}

/// The train/test protocol.
///
/// Reject selection takes the first applicable rule: an explicit
/// `n_rejects` count, then `acceptance_ratio` (accepted / total training
/// rows), then every reject. `max_total` caps accepted plus rejected
/// training rows, shrinking both sides in proportion when a ratio is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSpec {
    pub train_frac: f64,
    /// Held-out calibration fraction of the labeled rows (0 disables it).
    pub calibration_frac: f64,
    pub acceptance_ratio: Option<f64>,
    pub max_total: Option<usize>,
    pub n_rejects: Option<RejectCount>,
    /// Down-sample the training majority class to the minority count.
    pub balance: bool,
    pub seed: u64,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.7,
            calibration_frac: 0.0,
            acceptance_ratio: None,
            max_total: None,
            n_rejects: None,
            balance: true,
            seed: 0,
        }
    }
}

/// Standardized training and test sets plus the row indices they came from.
#[derive(Debug, Clone)]
pub struct Design {
    pub train_labeled: LabeledDataset,
    pub train_unlabeled: UnlabeledDataset,
    pub test: LabeledDataset,
    pub calibration: Option<LabeledDataset>,
    pub standardizer: Standardizer,
    /// Indices into the source labeled set.
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub calibration_idx: Vec<usize>,
    /// Indices into the source unlabeled set.
    pub reject_idx: Vec<usize>,
}

fn class_indices(labels: &[u8], class: u8) -> Vec<usize> {
    (0..labels.len()).filter(|&i| labels[i] == class).collect()
}

fn take(rng: &mut Rng, mut idx: Vec<usize>, k: usize) -> Vec<usize> {
    idx.shuffle(rng);
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub fn make_design(
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    spec: &DesignSpec,
) -> Result<Design> {
    if !(spec.train_frac > 0.0 && spec.train_frac < 1.0) {
        return Err(Error::contract("train_frac must lie in (0, 1)"));
    }
    if !(spec.calibration_frac >= 0.0 && spec.train_frac + spec.calibration_frac < 1.0) {
        return Err(Error::contract(
            "train_frac + calibration_frac must be below 1",
        ));
    }
    if let Some(r) = spec.acceptance_ratio {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::contract("acceptance_ratio must lie in (0, 1]"));
        }
    }
    if !unlabeled.is_empty() && unlabeled.feature_names != labeled.feature_names {
        return Err(Error::Schema(
            "accepted and rejected column schemas differ".into(),
        ));
    }
    let mut rng = seeded(spec.seed);

    let mut train = [Vec::new(), Vec::new()];
    let mut calib = Vec::new();
    let mut test = Vec::new();
    for c in 0..2u8 {
        let mut idx = class_indices(&labeled.labels, c);
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_train = (spec.train_frac * n as f64).round() as usize;
        let n_cal = (spec.calibration_frac * n as f64).round() as usize;
        train[c as usize] = idx[..n_train].to_vec();
        calib.extend_from_slice(&idx[n_train..n_train + n_cal]);
        test.extend_from_slice(&idx[n_train + n_cal..]);
    }
    if train[0].is_empty() || train[1].is_empty() {
        return Err(Error::Infeasible(
            "training split lacks one of the classes".into(),
        ));
    }

    let mut per_class = [train[0].len(), train[1].len()];
    if spec.balance {
        let k = per_class[0].min(per_class[1]);
        per_class = [k, k];
    }
    let n_acc: usize = per_class.iter().sum();
    let available = unlabeled.len();
    let (per_class, n_rej) = match (spec.n_rejects, spec.acceptance_ratio) {
        (Some(RejectCount::Count(k)), _) => cap_total(per_class, k, None, spec.max_total)?,
        (Some(RejectCount::All), _) | (None, None) => {
            cap_total(per_class, available, None, spec.max_total)?
        }
        (None, Some(r)) => {
            let m = ((n_acc as f64) * (1.0 - r) / r).round() as usize;
            cap_total(per_class, m, Some(r), spec.max_total)?
        }
    };
    if n_rej > available {
        return Err(Error::Infeasible(format!(
            "{n_rej} rejects requested but only {available} available"
        )));
    }
    let mut train_idx = Vec::new();
    for c in 0..2 {
        train_idx.extend(take(&mut rng, train[c].clone(), per_class[c]));
    }
    train_idx.sort_unstable();
    let reject_idx = take(&mut rng, (0..available).collect(), n_rej);
    test.sort_unstable();
    calib.sort_unstable();

    let raw_train = labeled.subset(&train_idx);
    let raw_rej = unlabeled.subset(&reject_idx);
    let standardizer = Standardizer::fit(
        &[&raw_train.features, &raw_rej.features],
        &labeled.feature_names,
    )?;
    let names = standardizer.output_names();
    let scale = |d: &LabeledDataset| -> Result<LabeledDataset> {
        LabeledDataset::new(
            standardizer.apply(&d.features)?,
            d.labels.clone(),
            names.clone(),
        )
    };
    let train_labeled = scale(&raw_train)?;
    let train_unlabeled =
        UnlabeledDataset::new(standardizer.apply(&raw_rej.features)?, names.clone())?;
    let test_set = scale(&labeled.subset(&test))?;
    let calibration = if calib.is_empty() {
        None
    } else {
        Some(scale(&labeled.subset(&calib))?)
    };
    Ok(Design {
        train_labeled,
        train_unlabeled,
        test: test_set,
        calibration,
        standardizer,
        train_idx,
        test_idx: test,
        calibration_idx: calib,
        reject_idx,
    })
}

/// Applies `max_total` to a (per-class accepted, rejected) request.
fn cap_total(
    per_class: [usize; 2],
    m: usize,
    ratio: Option<f64>,
    max_total: Option<usize>,
) -> Result<([usize; 2], usize)> {
    let n_acc = per_class[0] + per_class[1];
    let Some(max) = max_total else {
        return Ok((per_class, m));
    };
    if n_acc + m <= max {
        return Ok((per_class, m));
    }
    let scale_acc = |target: usize| -> [usize; 2] {
        if target >= n_acc {
            return per_class;
        }
        let f = target as f64 / n_acc as f64;
        [
            (per_class[0] as f64 * f).floor() as usize,
            (per_class[1] as f64 * f).floor() as usize,
        ]
    };
    let (pc, m) = match ratio {
        Some(r) => {
            let pc = scale_acc((max as f64 * r).floor() as usize);
            let acc = pc[0] + pc[1];
            let m = (((acc as f64) * (1.0 - r) / r).round() as usize).min(max - acc.min(max));
            (pc, m)
        }
        None => {
            if n_acc >= max {
                (scale_acc(max), 0)
            } else {
                (per_class, max - n_acc)
            }
        }
    };
    if pc[0] == 0 || pc[1] == 0 {
        return Err(Error::Infeasible(format!(
            "max_total {max} leaves no room for both classes"
        )));
    }
    Ok((pc, m))
}
