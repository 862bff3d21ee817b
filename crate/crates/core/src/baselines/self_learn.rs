use super::ProbabilityModel;
use crate::data::{LabeledDataset, UnlabeledDataset};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SelfLearned<M> {
    pub model: M,
    /// Rounds in which at least one reject was pseudo-labeled.
    pub rounds: usize,
    /// Labeled pool size before each training run.
    pub pool_sizes: Vec<usize>,
}

/// Self-training: repeatedly add rejects whose most likely class has
/// probability at least `confidence`, with that class as label, and retrain.
/// Stops when no reject qualifies or after `max_rounds` rounds.
pub fn self_learn<M, F>(
    mut trainer: F,
    accepted: &LabeledDataset,
    rejected: &UnlabeledDataset,
    confidence: f64,
    max_rounds: usize,
) -> Result<SelfLearned<M>>
where
    M: ProbabilityModel,
    F: FnMut(&LabeledDataset) -> Result<M>,
{
    if !(confidence > 0.5 && confidence < 1.0) {
        return Err(Error::contract("confidence must lie in (0.5, 1)"));
    }
    let mut pool = accepted.clone();
    let mut remaining: Vec<usize> = (0..rejected.len()).collect();
    let mut pool_sizes = vec![pool.len()];
    let mut model = trainer(&pool)?;
    let mut rounds = 0;
    while rounds < max_rounds && !remaining.is_empty() {
        let x = rejected.features.select_rows(&remaining);
        let p = model.predict_proba(&x)?;
        let mut moved = Vec::new();
        let mut labels = Vec::new();
        let mut keep = Vec::new();
        for (k, &i) in remaining.iter().enumerate() {
            if p[k] >= confidence {
                moved.push(i);
                labels.push(1u8);
            } else if 1.0 - p[k] >= confidence {
                moved.push(i);
                labels.push(0u8);
            } else {
                keep.push(i);
            }
        }
        if moved.is_empty() {
            break;
        }
        let add = LabeledDataset::new(
            rejected.features.select_rows(&moved),
            labels,
            rejected.feature_names.clone(),
        )?;
        pool = pool.concat(&add)?;
        remaining = keep;
        rounds += 1;
        pool_sizes.push(pool.len());
        model = trainer(&pool)?;
    }
    Ok(SelfLearned {
        model,
        rounds,
        pool_sizes,
    })
}
