use serde::{Deserialize, Serialize};

use super::ProbabilityModel;
use crate::data::LabeledDataset;
use crate::dists::{clamped_ln, clamped_ln_grad};
use crate::nn::{AdamConfig, AdamState, HeadActivation, HeadSpec, Matrix, MlpParams};
use crate::rng::{derive_seed, seeded};
use crate::schedule::run_epochs;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![70],
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 128,
            seed: 0,
        }
    }
}

/// Softmax MLP over the two outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub net: MlpParams,
}

impl ProbabilityModel for MlpClassifier {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self
            .net
            .forward(x)?
            .head(0)
            .iter_rows()
            .map(|r| r[1])
            .collect())
    }
}

/// Mean cross-entropy of a softmax network and its gradient.
pub fn mlp_loss(net: &MlpParams, x: &Matrix, y: &[u8]) -> Result<(f64, MlpParams)> {
    if y.len() != x.rows() || y.is_empty() {
        return Err(Error::dim("mlp labels", x.rows(), y.len()));
    }
    let pass = net.forward(x)?;
    let p = pass.head(0);
    let inv = 1.0 / y.len() as f64;
    let mut loss = 0.0;
    let mut d = Matrix::zeros(y.len(), 2);
    for (i, &yi) in y.iter().enumerate() {
        let pi = p.get(i, yi as usize);
        loss -= clamped_ln(pi) * inv;
        d.set(i, yi as usize, -clamped_ln_grad(pi) * inv);
    }
    Ok((loss, net.backward(&pass.tape, &[Some(&d)])?.params))
}

/// Trains a softmax MLP on labeled rows with Adam on cross-entropy.
pub fn supervised_mlp(data: &LabeledDataset, config: &MlpConfig) -> Result<MlpClassifier> {
    if data.is_empty() {
        return Err(Error::contract("supervised_mlp needs labeled rows"));
    }
    let mut rng = seeded(derive_seed(config.seed, 3));
    let dims: Vec<usize> = std::iter::once(data.dim())
        .chain(config.hidden.iter().copied())
        .collect();
    let heads = [HeadSpec::new("prob", 2, HeadActivation::Softmax)];
    let mut net = MlpParams::glorot(&dims, &heads, &mut rng)?;
    let mut adam = AdamState::for_nets(AdamConfig::with_lr(config.learning_rate), &[&net])?;
    run_epochs(
        config.epochs,
        data.len(),
        0,
        config.batch_size,
        false,
        &mut rng,
        |idx, _, _| {
            let x = data.features.select_rows(idx);
            let y: Vec<u8> = idx.iter().map(|&i| data.labels[i]).collect();
            let (loss, g) = mlp_loss(&net, &x, &y)?;
            adam.update_nets(&mut [&mut net], &[&g])?;
            Ok(loss)
        },
    )?;
    Ok(MlpClassifier { net })
}
